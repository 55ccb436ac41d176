#include "mrs/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mrs/errors.hpp"
#include "mrs/keyvalue.hpp"

namespace mrs {

namespace {

constexpr double kStochasticTol = 1e-12;
constexpr int kMaxAr = 4;

std::string idx(std::size_t i) { return std::to_string(i + 1); }

bool finite(double v) { return std::isfinite(v); }

}  // namespace

std::string_view to_string(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::AR1: return "AR1";
    case RegimeKind::IidNormal: return "Normal";
    case RegimeKind::IidShiftedGamma: return "ShiftedGamma";
    case RegimeKind::IidShiftedLogNormal: return "ShiftedLogNormal";
  }
  return "?";
}

RegimeKind regime_kind_from_string(std::string_view name) {
  if (name == "AR1") return RegimeKind::AR1;
  if (name == "Normal" || name == "IidNormal") return RegimeKind::IidNormal;
  if (name == "ShiftedGamma" || name == "IidShiftedGamma") return RegimeKind::IidShiftedGamma;
  if (name == "ShiftedLogNormal" || name == "IidShiftedLogNormal")
    return RegimeKind::IidShiftedLogNormal;
  throw ValidationError("unknown regime kind '" + std::string(name) + "'");
}

RegimeSpec RegimeSpec::ar1(double alpha, double phi, double sigma2) {
  RegimeSpec r;
  r.kind = RegimeKind::AR1;
  r.alpha = alpha;
  r.phi = phi;
  r.sigma2 = sigma2;
  return r;
}

RegimeSpec RegimeSpec::normal(double mu, double sigma2) {
  RegimeSpec r;
  r.kind = RegimeKind::IidNormal;
  r.mu = mu;
  r.sigma2 = sigma2;
  return r;
}

RegimeSpec RegimeSpec::shifted_gamma(double shape, double scale, double q, int sign) {
  RegimeSpec r;
  r.kind = RegimeKind::IidShiftedGamma;
  r.mu = shape;
  r.sigma2 = scale;
  r.q = q;
  r.sign = sign;
  return r;
}

RegimeSpec RegimeSpec::shifted_lognormal(double mu, double sigma2, double q, int sign) {
  RegimeSpec r;
  r.kind = RegimeKind::IidShiftedLogNormal;
  r.mu = mu;
  r.sigma2 = sigma2;
  r.q = q;
  r.sign = sign;
  return r;
}

int MrsModel::num_ar() const {
  int k = 0;
  while (k < num_regimes() && regimes[k].is_ar()) ++k;
  return k;
}

std::vector<Violation> validate(const MrsModel& model, Layout layout) {
  std::vector<Violation> out;
  auto add = [&](std::string field, std::string msg) {
    out.push_back({std::move(field), std::move(msg)});
  };
  const std::size_t M = model.regimes.size();
  if (M == 0) {
    add("regimes", "at least one regime required");
    return out;
  }
  bool seen_iid = false;
  int k = 0;
  for (std::size_t i = 0; i < M; ++i) {
    const auto& r = model.regimes[i];
    const std::string base = "regime." + idx(i) + ".";
    if (r.is_ar()) {
      ++k;
      if (seen_iid && layout == Layout::Independent) add(base + "kind", "AR1 regimes must precede i.i.d. regimes");
      if (!finite(r.alpha)) add(base + "alpha", "must be finite");
      if (!finite(r.phi) || std::abs(r.phi) >= 1.0) add(base + "phi", "must satisfy |phi| < 1");
    } else {
      seen_iid = true;
      if (!finite(r.mu)) add(base + "mu", "must be finite");
      if (r.kind == RegimeKind::IidShiftedGamma && !(r.mu > 0.0))
        add(base + "mu", "gamma shape must be > 0");
    }
    if (!finite(r.sigma2) || !(r.sigma2 > 0.0)) add(base + "sigma2", "must be finite and > 0");
    if (r.is_shifted()) {
      if (r.sign != 1 && r.sign != -1) add(base + "sign", "must be +1 or -1");
      if (!finite(r.q)) add(base + "q", "must be finite");
    }
  }
  if (layout == Layout::Independent && k < 1) add("regimes", "at least one AR1 regime required");
  if (layout == Layout::Independent && k > kMaxAr) add("regimes", "at most " + std::to_string(kMaxAr) + " AR1 regimes supported");

  if (model.P.rows() != M || model.P.cols() != M) {
    add("P", "must be " + std::to_string(M) + "x" + std::to_string(M));
  } else {
    for (std::size_t i = 0; i < M; ++i) {
      double s = 0.0;
      bool bad = false;
      for (std::size_t j = 0; j < M; ++j) {
        double p = model.P(i, j);
        if (!finite(p) || p < 0.0 || p > 1.0) {
          add("P." + idx(i) + "." + idx(j), "must lie in [0, 1]");
          bad = true;
        }
        s += p;
      }
      if (!bad && std::abs(s - 1.0) > kStochasticTol)
        add("P." + idx(i), "row sums to " + format_double(s) + ", expected 1");
    }
  }
  if (model.pi.size() != M) {
    add("pi", "must have length " + std::to_string(M));
  } else {
    double s = 0.0;
    bool bad = false;
    for (std::size_t i = 0; i < M; ++i) {
      double p = model.pi[i];
      if (!finite(p) || p < 0.0 || p > 1.0) {
        add("pi." + idx(i), "must lie in [0, 1]");
        bad = true;
      }
      s += p;
    }
    if (!bad && std::abs(s - 1.0) > kStochasticTol)
      add("pi", "sums to " + format_double(s) + ", expected 1");
  }
  return out;
}

void require_valid(const MrsModel& model, Layout layout) {
  auto v = validate(model, layout);
  if (v.empty()) return;
  std::string msg = "invalid model:";
  for (const auto& e : v) msg += " " + e.field + " (" + e.message + ");";
  throw ValidationError(msg);
}

int num_free_parameters(const MrsModel& model, PiTreatment pi) {
  int n = 0;
  for (const auto& r : model.regimes) n += r.is_ar() ? 3 : 2;
  int M = model.num_regimes();
  n += M * (M - 1);
  if (pi == PiTreatment::Estimated) n += M - 1;
  return n;
}

std::vector<double> flatten_parameters(const MrsModel& model) {
  std::vector<double> v;
  for (const auto& r : model.regimes) {
    if (r.is_ar()) {
      v.push_back(r.alpha);
      v.push_back(r.phi);
    } else {
      v.push_back(r.mu);
    }
    v.push_back(r.sigma2);
  }
  v.insert(v.end(), model.P.data().begin(), model.P.data().end());
  v.insert(v.end(), model.pi.begin(), model.pi.end());
  return v;
}

double sup_distance(const MrsModel& a, const MrsModel& b) {
  auto va = flatten_parameters(a);
  auto vb = flatten_parameters(b);
  if (va.size() != vb.size()) throw ValidationError("sup_distance: models differ in shape");
  double d = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) d = std::max(d, std::abs(va[i] - vb[i]));
  return d;
}

MrsModel permute_regimes(const MrsModel& model, const std::vector<int>& perm) {
  const std::size_t M = model.regimes.size();
  if (perm.size() != M) throw ValidationError("permutation length mismatch");
  MrsModel out;
  out.P = Matrix(M, M);
  out.pi.resize(M);
  for (std::size_t a = 0; a < M; ++a) {
    out.regimes.push_back(model.regimes[perm[a]]);
    out.pi[a] = model.pi[perm[a]];
    for (std::size_t b = 0; b < M; ++b) out.P(a, b) = model.P(perm[a], perm[b]);
  }
  return out;
}

// ---- numbers ----------------------------------------------------------------

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError("not a number: '" + std::string(text) + "'");
  return v;
}

// ---- key-value --------------------------------------------------------------

std::string to_key_value(const MrsModel& model) {
  std::ostringstream os;
  const std::size_t M = model.regimes.size();
  for (std::size_t i = 0; i < M; ++i) {
    const auto& r = model.regimes[i];
    const std::string p = "regime." + idx(i) + ".";
    os << p << "kind = " << to_string(r.kind) << '\n';
    if (r.is_ar()) {
      os << p << "alpha = " << format_double(r.alpha) << '\n';
      os << p << "phi = " << format_double(r.phi) << '\n';
    } else {
      os << p << "mu = " << format_double(r.mu) << '\n';
    }
    os << p << "sigma2 = " << format_double(r.sigma2) << '\n';
    if (r.is_shifted()) {
      os << p << "q = " << format_double(r.q) << '\n';
      os << p << "sign = " << r.sign << '\n';
    }
  }
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      os << "P." << idx(i) << '.' << idx(j) << " = " << format_double(model.P(i, j)) << '\n';
  for (std::size_t i = 0; i < M; ++i) os << "pi." << idx(i) << " = " << format_double(model.pi[i]) << '\n';
  return os.str();
}

MrsModel model_from_key_value(std::string_view text) {
  auto kv = parse_key_value(text);
  std::size_t M = 0;
  while (kv.count("regime." + idx(M) + ".kind")) ++M;
  if (M == 0) throw ValidationError("model file defines no regimes (expected regime.1.kind)");

  std::map<std::string, bool> used;
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ValidationError("missing key '" + key + "'");
    used[key] = true;
    return it->second;
  };
  auto num = [&](const std::string& key) {
    try {
      return parse_double(get(key));
    } catch (const ValidationError& e) {
      if (kv.count(key)) throw ValidationError("key '" + key + "': " + e.what());
      throw;
    }
  };

  MrsModel m;
  for (std::size_t i = 0; i < M; ++i) {
    const std::string p = "regime." + idx(i) + ".";
    RegimeSpec r;
    r.kind = regime_kind_from_string(get(p + "kind"));
    if (r.is_ar()) {
      r.alpha = num(p + "alpha");
      r.phi = num(p + "phi");
    } else {
      r.mu = num(p + "mu");
    }
    r.sigma2 = num(p + "sigma2");
    if (r.is_shifted()) {
      r.q = num(p + "q");
      r.sign = kv.count(p + "sign") ? static_cast<int>(num(p + "sign")) : 1;
    }
    m.regimes.push_back(r);
  }
  m.P = Matrix(M, M);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) m.P(i, j) = num("P." + idx(i) + "." + idx(j));
  m.pi.resize(M);
  for (std::size_t i = 0; i < M; ++i) m.pi[i] = num("pi." + idx(i));
  for (const auto& [key, value] : kv) {
    if (!used.count(key)) throw ValidationError("unknown key '" + key + "'");
  }
  return m;
}

// ---- JSON -------------------------------------------------------------------

std::string to_json(const MrsModel& model) {
  nlohmann::ordered_json j;
  j["regimes"] = nlohmann::ordered_json::array();
  for (const auto& r : model.regimes) {
    nlohmann::ordered_json e;
    e["kind"] = std::string(to_string(r.kind));
    if (r.is_ar()) {
      e["alpha"] = r.alpha;
      e["phi"] = r.phi;
    } else {
      e["mu"] = r.mu;
    }
    e["sigma2"] = r.sigma2;
    if (r.is_shifted()) {
      e["q"] = r.q;
      e["sign"] = r.sign;
    }
    j["regimes"].push_back(e);
  }
  const std::size_t M = model.regimes.size();
  j["P"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < M; ++i) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < M; ++c) row.push_back(model.P(i, c));
    j["P"].push_back(row);
  }
  j["pi"] = model.pi;
  return j.dump(2) + "\n";
}

MrsModel model_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what());
  }
  try {
    MrsModel m;
    for (const auto& e : j.at("regimes")) {
      RegimeSpec r;
      r.kind = regime_kind_from_string(e.at("kind").get<std::string>());
      if (r.is_ar()) {
        r.alpha = e.at("alpha").get<double>();
        r.phi = e.at("phi").get<double>();
      } else {
        r.mu = e.at("mu").get<double>();
      }
      r.sigma2 = e.at("sigma2").get<double>();
      if (r.is_shifted()) {
        r.q = e.at("q").get<double>();
        r.sign = e.value("sign", 1);
      }
      m.regimes.push_back(r);
    }
    const std::size_t M = m.regimes.size();
    m.P = Matrix(M, M);
    const auto& P = j.at("P");
    if (P.size() != M) throw ValidationError("P must have " + std::to_string(M) + " rows");
    for (std::size_t i = 0; i < M; ++i) {
      if (P[i].size() != M) throw ValidationError("P row " + idx(i) + " has wrong length");
      for (std::size_t c = 0; c < M; ++c) m.P(i, c) = P[i][c].get<double>();
    }
    m.pi = j.at("pi").get<std::vector<double>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model JSON: ") + e.what());
  }
}

namespace {
bool ends_with_json(const std::string& path) {
  return path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
}
}  // namespace

MrsModel load_model(const std::string& path) {
  std::string text = read_text_file(path);
  return ends_with_json(path) ? model_from_json(text) : model_from_key_value(text);
}

void save_model(const MrsModel& model, const std::string& path) {
  write_text_file(path, ends_with_json(path) ? to_json(model) : to_key_value(model));
}

}  // namespace mrs
