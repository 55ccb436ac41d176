// mrs: command-line front end for simulation, fitting, smoothing,
// detrending, oracle checks and benchmarks.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mrs/backward.hpp"
#include "mrs/baselines.hpp"
#include "mrs/csv.hpp"
#include "mrs/em.hpp"
#include "mrs/errors.hpp"
#include "mrs/forward.hpp"
#include "mrs/keyvalue.hpp"
#include "mrs/model.hpp"
#include "mrs/oracle.hpp"
#include "mrs/pipeline.hpp"
#include "mrs/presets.hpp"
#include "mrs/simulator.hpp"

namespace {

using namespace mrs;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

// Resolved settings, echoed into the first line of every output file.
class ConfigEcho {
 public:
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  void set(const std::string& key, double value) { entries_[key] = format_double(value); }
  void set(const std::string& key, long long value) { entries_[key] = std::to_string(value); }
  std::string line() const {
    std::string s = "# config:";
    for (const auto& [k, v] : entries_) s += " " + k + "=" + v;
    return s + "\n";
  }

 private:
  std::map<std::string, std::string> entries_;
};

Truncation parse_truncation(const std::string& s) {
  if (s.empty() || s == "none") return std::nullopt;
  int d = 0;
  try {
    std::size_t pos = 0;
    d = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
  } catch (const std::exception&) {
    throw ValidationError("truncation must be an integer or 'none', got '" + s + "'");
  }
  return d;
}

std::string truncation_text(Truncation D) { return D ? std::to_string(*D) : "none"; }

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    write_text_file(path, text);
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& f : split_fields(s))
    if (!f.empty()) out.push_back(f);
  return out;
}

// ---- model source ----------------------------------------------------------

struct ModelSource {
  std::string path;
  std::string preset;

  void add(CLI::App* app, bool required) {
    auto* m = app->add_option("--model", path, "model file (.json or key-value)");
    auto* p = app->add_option("--preset", preset, "built-in model: model1, model2, example2, example3, m1-ln");
    m->excludes(p);
    p->excludes(m);
    if (required) app->callback([this]() {
        if (path.empty() && preset.empty()) throw CLI::RequiredError("--model or --preset");
      });
  }
  MrsModel load() const {
    if (!preset.empty()) return presets::by_name(preset);
    return load_model(path);
  }
  std::string describe() const { return preset.empty() ? path : "preset:" + preset; }
};

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  ModelSource model;
  long long T = 100;
  std::uint64_t seed = 1;
  std::string out;
  bool dependent = false;
  bool latents = false;
};

int cmd_simulate(const SimulateArgs& a) {
  MrsModel m = a.model.load();
  if (a.T < 0) throw ValidationError("--T must be >= 0");
  SimResult s = a.dependent ? simulate_dependent(DependentMrsModel{m}, a.T, a.seed) : simulate(m, a.T, a.seed);
  ConfigEcho cfg;
  cfg.set("command", "simulate");
  cfg.set("model", a.model.describe());
  cfg.set("T", a.T);
  cfg.set("seed", static_cast<long long>(a.seed));
  cfg.set("dependent", a.dependent ? "true" : "false");
  std::ostringstream os;
  os << cfg.line() << "t,x,r";
  if (a.latents)
    for (std::size_t i = 0; i < s.latents.size(); ++i) os << ",latent" << i + 1;
  os << '\n';
  for (std::size_t t = 0; t < s.x.size(); ++t) {
    os << t << ',' << format_double(s.x[t]) << ',' << s.r[t] + 1;
    if (a.latents)
      for (const auto& l : s.latents) os << ',' << format_double(l[t]);
    os << '\n';
  }
  emit(a.out, os.str());
  return 0;
}

// ---- fit -------------------------------------------------------------------

struct FitArgs {
  ModelSource model;
  std::string data;
  std::string algorithm = "em";
  std::string config_file;
  int restarts = 1;
  int max_iters = 1000;
  double tol = 1.5e-8;
  std::string truncation = "none";
  std::uint64_t seed = 1;
  int threads = 0;
  bool no_guards = false;
  double sigma2_floor = 0.0;
  double delta = 1e-4;
  bool fix_pi = false;
  std::string prefix = "fit";
  std::string candidates;
  CLI::App* app = nullptr;
};

void apply_config_file(FitArgs& a) {
  if (a.config_file.empty()) return;
  auto kv = parse_key_value(read_text_file(a.config_file));
  auto given = [&](const char* flag) { return a.app->get_option(flag)->count() > 0; };
  for (const auto& [k, v] : kv) {
    std::string flag = "--" + k;
    if (k == "algorithm") {
      if (!given("--algorithm")) a.algorithm = v;
    } else if (k == "restarts") {
      if (!given("--restarts")) a.restarts = static_cast<int>(parse_double(v));
    } else if (k == "max-iters") {
      if (!given("--max-iters")) a.max_iters = static_cast<int>(parse_double(v));
    } else if (k == "tol") {
      if (!given("--tol")) a.tol = parse_double(v);
    } else if (k == "truncation") {
      if (!given("--truncation")) a.truncation = v;
    } else if (k == "seed") {
      if (!given("--seed")) {
        std::uint64_t seed = 0;
        auto res = std::from_chars(v.data(), v.data() + v.size(), seed);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size())
          throw ValidationError(a.config_file + ": seed must be a nonnegative integer");
        a.seed = seed;
      }
    } else if (k == "threads") {
      if (!given("--threads")) a.threads = static_cast<int>(parse_double(v));
    } else if (k == "sigma2-floor") {
      if (!given("--sigma2-floor")) a.sigma2_floor = parse_double(v);
    } else if (k == "delta") {
      if (!given("--delta")) a.delta = parse_double(v);
    } else if (k == "guards") {
      if (!given("--no-guards")) a.no_guards = v == "false" || v == "0";
    } else if (k == "estimate-pi") {
      if (!given("--fix-pi")) a.fix_pi = v == "false" || v == "0";
    } else {
      throw ValidationError(a.config_file + ": unknown key '" + k + "'");
    }
  }
}

EmConfig em_config(const FitArgs& a) {
  EmConfig c;
  c.tol = a.tol;
  c.max_iters = a.max_iters;
  c.restarts = a.restarts;
  c.truncation_D = parse_truncation(a.truncation);
  if (a.sigma2_floor > 0.0) c.sigma2_floor = a.sigma2_floor;
  c.delta = a.delta;
  c.guards = !a.no_guards;
  c.estimate_pi = !a.fix_pi;
  c.seed = a.seed;
  c.threads = a.threads;
  return c;
}

ConfigEcho fit_echo(const FitArgs& a, const EmConfig& c) {
  ConfigEcho e;
  e.set("command", "fit");
  e.set("data", a.data);
  e.set("model", a.model.describe());
  e.set("algorithm", a.algorithm);
  e.set("restarts", static_cast<long long>(c.restarts));
  e.set("max-iters", static_cast<long long>(c.max_iters));
  e.set("tol", c.tol);
  e.set("truncation", truncation_text(c.truncation_D));
  e.set("seed", static_cast<long long>(c.seed));
  e.set("guards", c.guards ? "true" : "false");
  e.set("delta", c.delta);
  e.set("sigma2-floor", c.sigma2_floor ? format_double(*c.sigma2_floor) : "auto");
  e.set("estimate-pi", c.estimate_pi ? "true" : "false");
  return e;
}

std::string parameter_header(const MrsModel& m) {
  std::string s;
  for (int i = 0; i < m.num_regimes(); ++i) {
    std::string p = "regime" + std::to_string(i + 1) + ".";
    if (m.regimes[i].is_ar()) s += "," + p + "alpha," + p + "phi," + p + "sigma2";
    else s += "," + p + "mu," + p + "sigma2";
  }
  for (std::size_t i = 0; i < m.P.rows(); ++i)
    for (std::size_t j = 0; j < m.P.cols(); ++j) s += ",P" + std::to_string(i + 1) + std::to_string(j + 1);
  for (std::size_t i = 0; i < m.pi.size(); ++i) s += ",pi" + std::to_string(i + 1);
  return s;
}

std::string parameter_row(const MrsModel& m) {
  std::string s;
  for (double v : flatten_parameters(m)) s += "," + format_double(v);
  return s;
}

void write_fit_outputs(const FitArgs& a, const ConfigEcho& echo, const FitReport& r, const MrsModel& templ) {
  save_model(r.theta_hat, a.prefix + ".model.kv");

  std::ostringstream tr;
  tr << echo.line() << "iteration,loglik" << (r.approximate ? "_approximate" : "") << '\n';
  for (std::size_t i = 0; i < r.loglik_trajectory.size(); ++i)
    tr << i << ',' << format_double(r.loglik_trajectory[i]) << '\n';
  write_text_file(a.prefix + ".trajectory.csv", tr.str());

  std::ostringstream rs;
  rs << echo.line() << "restart,seed,failed,loglik,iterations,termination" << parameter_header(templ) << ",error\n";
  for (std::size_t i = 0; i < r.per_restart.size(); ++i) {
    const RestartResult& x = r.per_restart[i];
    rs << i << ',' << x.seed << ',' << (x.failed ? 1 : 0) << ',';
    if (x.failed) {
      rs << "nan,0,failed";
      for (std::size_t j = 0; j < flatten_parameters(templ).size(); ++j) rs << ",nan";
      std::string err = x.error;
      for (char& ch : err)
        if (ch == ',' || ch == '\n') ch = ';';
      rs << ',' << err << '\n';
    } else {
      rs << format_double(x.loglik) << ',' << x.iterations << ',' << to_string(x.termination)
         << parameter_row(x.theta) << ",\n";
    }
  }
  write_text_file(a.prefix + ".restarts.csv", rs.str());

  std::ostringstream rep;
  rep << echo.line();
  rep << "algorithm = " << r.algorithm << '\n';
  rep << "approximate = " << (r.approximate ? "true" : "false") << '\n';
  rep << "loglik = " << format_double(r.loglik) << '\n';
  rep << "iterations = " << r.iterations << '\n';
  rep << "termination = " << to_string(r.termination) << '\n';
  rep << "best_restart = " << r.best_restart << '\n';
  write_text_file(a.prefix + ".report.kv", rep.str());
}

int cmd_fit(FitArgs& a) {
  apply_config_file(a);
  std::vector<double> x = read_series(a.data);
  EmConfig c = em_config(a);
  ConfigEcho echo = fit_echo(a, c);

  if (!a.candidates.empty()) {
    std::vector<Candidate> cands;
    if (a.candidates == "all") cands = all_candidates();
    else
      for (const auto& n : split_list(a.candidates)) cands.push_back(candidate_from_string(n));
    echo.set("candidates", a.candidates);
    auto reports = fit_candidates(x, cands, c);
    std::ostringstream os;
    os << echo.line() << "rank,candidate,ok,loglik,n_params,bic,error\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const auto& r = reports[i];
      std::string err = r.error;
      for (char& ch : err)
        if (ch == ',' || ch == '\n') ch = ';';
      os << i + 1 << ',' << to_string(r.candidate) << ',' << (r.ok ? 1 : 0) << ','
         << (r.ok ? format_double(r.fit.loglik) : "nan") << ',' << r.n_params << ','
         << (r.ok ? format_double(r.bic) : "nan") << ',' << err << '\n';
      if (r.ok) save_model(r.fit.theta_hat, a.prefix + "." + std::string(to_string(r.candidate)) + ".model.kv");
    }
    write_text_file(a.prefix + ".candidates.csv", os.str());
    std::cout << os.str();
    if (reports.empty() || !reports.front().ok) throw NumericalError("every candidate fit failed");
    return 0;
  }

  MrsModel templ = a.model.load();
  FitFunction fit;
  if (a.algorithm == "em") fit = em_fit;
  else if (a.algorithm == "emlike") fit = emlike_fit;
  else if (a.algorithm == "dependent-em")
    fit = [](const MrsModel& m, const std::vector<double>& xs, const EmConfig& cfg) { return dependent_em(m, xs, cfg); };
  else throw ValidationError("unknown algorithm '" + a.algorithm + "'");
  if (a.algorithm == "dependent-em") require_valid(templ, Layout::Dependent);
  else require_valid(templ);

  FitReport r = multistart(x, templ, c, {}, fit);
  write_fit_outputs(a, echo, r, templ);
  std::cout << "loglik" << (r.approximate ? " (approximate)" : "") << " = " << format_double(r.loglik)
            << "\ntermination = " << to_string(r.termination) << "\niterations = " << r.iterations
            << "\nbest_restart = " << r.best_restart << '\n';
  return 0;
}

// ---- smooth / classify -----------------------------------------------------

struct SmoothArgs {
  ModelSource model;
  std::string data;
  std::string truncation = "none";
  std::string out;
  int regime = 2;
  double threshold = 0.5;
};

SmoothedResult run_smoother(const MrsModel& m, const std::string& data_path, Truncation D, std::vector<double>& x) {
  CsvTable t = read_csv(data_path);
  x = read_series(data_path);
  if (t.column("r") >= 0) {
    for (double r : t.numeric_column("r"))
      if (r < 1 || r > m.num_regimes())
        throw ValidationError(data_path + ": regime labels exceed the model's " + std::to_string(m.num_regimes()) +
                              " regimes");
  }
  ForwardResult f = forward_normalized(m, x, D);
  return backward_smooth(m, f);
}

int cmd_smooth(const SmoothArgs& a) {
  MrsModel m = a.model.load();
  std::vector<double> x;
  Truncation D = parse_truncation(a.truncation);
  SmoothedResult s = run_smoother(m, a.data, D, x);
  ConfigEcho e;
  e.set("command", "smooth");
  e.set("model", a.model.describe());
  e.set("data", a.data);
  e.set("truncation", truncation_text(D));
  std::ostringstream os;
  os << e.line() << "t";
  for (int i = 0; i < m.num_regimes(); ++i) os << ",p" << i + 1;
  os << ",label\n";
  for (std::size_t t = 0; t < x.size(); ++t) {
    const auto& p = s.regime_marginal[t];
    os << t;
    int best = 0;
    for (int i = 0; i < m.num_regimes(); ++i) {
      os << ',' << format_double(p[i]);
      if (p[i] > p[best]) best = i;
    }
    os << ',' << best + 1 << '\n';
  }
  emit(a.out, os.str());
  return 0;
}

int cmd_classify(const SmoothArgs& a) {
  MrsModel m = a.model.load();
  if (a.regime < 1 || a.regime > m.num_regimes()) throw ValidationError("--regime out of range");
  std::vector<double> x;
  Truncation D = parse_truncation(a.truncation);
  SmoothedResult s = run_smoother(m, a.data, D, x);
  std::vector<int> labels = classify(s, a.regime - 1, a.threshold);
  ConfigEcho e;
  e.set("command", "classify");
  e.set("model", a.model.describe());
  e.set("data", a.data);
  e.set("truncation", truncation_text(D));
  e.set("regime", static_cast<long long>(a.regime));
  e.set("threshold", a.threshold);
  std::ostringstream os;
  os << e.line() << "t,x,p_spike,label\n";
  for (std::size_t t = 0; t < x.size(); ++t)
    os << t << ',' << format_double(x[t]) << ',' << format_double(s.regime_marginal[t][a.regime - 1]) << ','
       << labels[t] << '\n';
  emit(a.out, os.str());
  return 0;
}

// ---- detrend ---------------------------------------------------------------

struct DetrendArgs {
  std::string prices;
  std::string daily;
  int window = 64;
  double threshold_sd = 3.0;
  bool iterate = false;
  std::string out_trend = "trend.csv";
  std::string out_detrended = "detrended.csv";
  std::string out_daily;
};

int cmd_detrend(const DetrendArgs& a) {
  PriceSeries daily;
  if (!a.prices.empty()) {
    DailyAverage d = daily_average(read_prices(a.prices));
    for (const auto& w : d.warnings) std::cerr << "warning: " << w << '\n';
    daily = std::move(d.daily);
  } else {
    daily = read_daily(a.daily);
  }
  RfpConfig rc;
  rc.window = a.window;
  rc.threshold_sd = a.threshold_sd;
  rc.iterate = a.iterate;
  DetrendResult r = rfp_detrend(daily, rc);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  ConfigEcho e;
  e.set("command", "detrend");
  e.set("input", a.prices.empty() ? a.daily : a.prices);
  e.set("window", static_cast<long long>(a.window));
  e.set("threshold-sd", a.threshold_sd);
  e.set("iterate", a.iterate ? "true" : "false");
  e.set("method", r.trend.method);

  std::ostringstream tr, dt;
  tr << e.line() << "date,g,h\n";
  dt << e.line() << "date,x\n";
  for (std::size_t t = 0; t < daily.values.size(); ++t) {
    std::string day = format_day(daily.days[t]);
    tr << day << ',' << format_double(r.trend.g(t)) << ',' << format_double(r.trend.longterm[t]) << '\n';
    dt << day << ',' << format_double(r.x[t]) << '\n';
  }
  write_text_file(a.out_trend, tr.str());
  write_text_file(a.out_detrended, dt.str());
  if (!a.out_daily.empty()) {
    std::ostringstream dd;
    dd << e.line() << "date,price\n";
    for (std::size_t t = 0; t < daily.values.size(); ++t)
      dd << format_day(daily.days[t]) << ',' << format_double(daily.values[t]) << '\n';
    write_text_file(a.out_daily, dd.str());
  }
  std::cout << "days = " << daily.values.size() << "\nreplaced = " << r.replaced.size() << "\nbetas =";
  for (double b : r.trend.weekday_betas) std::cout << ' ' << format_double(b);
  std::cout << '\n';
  return 0;
}

// ---- verify ----------------------------------------------------------------

struct VerifyArgs {
  ModelSource model;
  std::string data;
  long long T = 6;
  std::uint64_t seed = 1;
  std::string truncation = "none";
  bool dependent = false;
  double tolerance = 1e-10;
};

int cmd_verify(const VerifyArgs& a) {
  MrsModel m = a.model.load();
  std::vector<double> x;
  if (!a.data.empty()) x = read_series(a.data);
  else x = (a.dependent ? simulate_dependent(DependentMrsModel{m}, a.T, a.seed) : simulate(m, a.T, a.seed)).x;
  Truncation D = parse_truncation(a.truncation);

  double d_ll = 0.0, d_marg = 0.0, d_pair = 0.0;
  OracleResult o;
  std::vector<std::vector<double>> marg;
  std::vector<Matrix> pair;
  double ll = 0.0;
  if (a.dependent) {
    DependentMrsModel dm{m};
    o = brute_dependent(dm, x);
    HamiltonResult h = hamilton_forward(dm, x);
    KimResult k = kim_backward(m.P, h);
    ll = h.loglik;
    marg = k.smoothed;
    pair = k.pairwise;
  } else {
    o = brute_likelihood(m, x, D);
    ForwardResult f = forward_normalized(m, x, D);
    SmoothedResult s = smooth(m, f);
    ll = f.loglik;
    marg = s.regime_marginal;
    pair = s.pairwise;
  }
  d_ll = std::abs(ll - o.log_likelihood);
  for (std::size_t t = 0; t < x.size(); ++t)
    for (int i = 0; i < m.num_regimes(); ++i) {
      d_marg = std::max(d_marg, std::abs(marg[t][i] - o.regime_posterior[t][i]));
      if (t == 0) continue;
      for (int j = 0; j < m.num_regimes(); ++j)
        d_pair = std::max(d_pair, std::abs(pair[t](i, j) - o.pairwise[t](i, j)));
    }
  bool ok = d_ll <= a.tolerance && d_marg <= a.tolerance && d_pair <= a.tolerance;
  std::cout << "T = " << x.size() - 1 << "\nloglik = " << format_double(ll)
            << "\noracle_loglik = " << format_double(o.log_likelihood) << "\nmax_abs_loglik_diff = " << d_ll
            << "\nmax_abs_marginal_diff = " << d_marg << "\nmax_abs_pairwise_diff = " << d_pair
            << "\nresult = " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? 0 : kExitNumerical;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  ModelSource model;
  std::string Ts = "100,200,400,800";
  std::string Ds = "none";
  std::uint64_t seed = 1;
  int repeats = 1;
  std::string out;
};

int cmd_bench(const BenchArgs& a) {
  MrsModel m = a.model.load();
  if (a.repeats < 1) throw ValidationError("--repeats must be >= 1");
  ConfigEcho e;
  e.set("command", "bench");
  e.set("model", a.model.describe());
  e.set("T", a.Ts);
  e.set("truncation", a.Ds);
  e.set("seed", static_cast<long long>(a.seed));
  e.set("repeats", static_cast<long long>(a.repeats));
  std::ostringstream os;
  os << e.line() << "T,k,M,D,wall_time,peak_state_count\n";
  for (const auto& ts : split_list(a.Ts)) {
    long long T = std::stoll(ts);
    if (T < 0) throw ValidationError("bench lengths must be >= 0");
    std::vector<double> x = simulate(m, T, a.seed).x;
    for (const auto& ds : split_list(a.Ds)) {
      Truncation D = parse_truncation(ds);
      double best = 1e300;
      std::size_t peak = 0;
      for (int r = 0; r < a.repeats; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        ForwardResult f = forward_normalized(m, x, D);
        SmoothedResult s = smooth(m, f);
        auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
        peak = f.peak_state_count();
        (void)s;
      }
      os << T << ',' << m.num_ar() << ',' << m.num_regimes() << ',' << truncation_text(D) << ','
         << format_double(best) << ',' << peak << '\n';
    }
  }
  emit(a.out, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov regime-switching models with independent AR(1) regimes"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "simulate a series from a model");
  sim.model.add(s, true);
  s->add_option("--T", sim.T, "last time index (T + 1 observations)");
  s->add_option("--seed", sim.seed, "random seed");
  s->add_option("--out", sim.out, "output CSV (default stdout)");
  s->add_flag("--dependent", sim.dependent, "treat AR1 regimes as dependent on the previous observation");
  s->add_flag("--latents", sim.latents, "add the latent AR1 paths as columns");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "estimate parameters by EM");
  fit.app = f;
  fit.model.add(f, false);
  f->add_option("--data", fit.data, "CSV with an x column")->required();
  f->add_option("--algorithm", fit.algorithm, "em, emlike or dependent-em")
      ->check(CLI::IsMember({"em", "emlike", "dependent-em"}));
  f->add_option("--config", fit.config_file, "key-value file of fit settings (flags win)");
  f->add_option("--restarts", fit.restarts, "number of starts; the first is the given model");
  f->add_option("--max-iters", fit.max_iters, "iteration cap per start");
  f->add_option("--tol", fit.tol, "stopping tolerance");
  f->add_option("--truncation", fit.truncation, "counter cap D or 'none'");
  f->add_option("--seed", fit.seed, "seed for random starts");
  f->add_option("--threads", fit.threads, "worker threads (0: all cores)");
  f->add_flag("--no-guards", fit.no_guards, "disable the sigma2 floor and transition bounds");
  f->add_option("--sigma2-floor", fit.sigma2_floor, "variance floor (default 1e-8 times var(x))");
  f->add_option("--delta", fit.delta, "transition probabilities kept in [delta, 1-delta]");
  f->add_flag("--fix-pi", fit.fix_pi, "keep the initial distribution fixed");
  f->add_option("--out-prefix", fit.prefix, "prefix for output files");
  f->add_option("--candidates", fit.candidates, "'all' or a list of M1-LN,M1-Gamma,M2-LN,M2-Gamma");
  f->callback([&fit]() {
    if (fit.candidates.empty() && fit.model.path.empty() && fit.model.preset.empty())
      throw CLI::RequiredError("--model, --preset or --candidates");
  });

  SmoothArgs sm;
  auto* sc = app.add_subcommand("smooth", "smoothed regime probabilities");
  sm.model.add(sc, true);
  sc->add_option("--data", sm.data, "CSV with an x column")->required();
  sc->add_option("--truncation", sm.truncation, "counter cap D or 'none'");
  sc->add_option("--out", sm.out, "output CSV (default stdout)");

  SmoothArgs cl;
  auto* cc = app.add_subcommand("classify", "label each t by its smoothed spike probability");
  cl.model.add(cc, true);
  cc->add_option("--data", cl.data, "CSV with an x column")->required();
  cc->add_option("--truncation", cl.truncation, "counter cap D or 'none'");
  cc->add_option("--regime", cl.regime, "1-based spike regime");
  cc->add_option("--threshold", cl.threshold, "label spike when the probability exceeds this");
  cc->add_option("--out", cl.out, "output CSV (default stdout)");

  DetrendArgs dt;
  auto* dc = app.add_subcommand("detrend", "weekday plus long-term trend with spike replacement");
  auto* pr = dc->add_option("--prices", dt.prices, "CSV timestamp,price (intraday)");
  auto* dl = dc->add_option("--daily", dt.daily, "CSV date,price");
  pr->excludes(dl);
  dc->add_option("--window", dt.window, "moving-average window in days (even)");
  dc->add_option("--threshold-sd", dt.threshold_sd, "replacement threshold in residual standard deviations");
  dc->add_flag("--iterate", dt.iterate, "repeat replacement until nothing changes");
  dc->add_option("--out-trend", dt.out_trend, "trend CSV (date,g,h)");
  dc->add_option("--out-detrended", dt.out_detrended, "detrended CSV (date,x)");
  dc->add_option("--out-daily", dt.out_daily, "daily averages CSV (date,price)");
  dc->callback([&dt]() {
    if (dt.prices.empty() && dt.daily.empty()) throw CLI::RequiredError("--prices or --daily");
  });

  VerifyArgs vf;
  auto* vc = app.add_subcommand("verify", "compare the recursions with brute-force enumeration");
  vf.model.add(vc, true);
  vc->add_option("--data", vf.data, "CSV with an x column (default: simulate)");
  vc->add_option("--T", vf.T, "length of the simulated series");
  vc->add_option("--seed", vf.seed, "random seed");
  vc->add_option("--truncation", vf.truncation, "counter cap D or 'none'");
  vc->add_flag("--dependent", vf.dependent, "check the dependent-regime recursions instead");
  vc->add_option("--tolerance", vf.tolerance, "absolute tolerance");

  BenchArgs bn;
  auto* bc = app.add_subcommand("bench", "time one E-step over a grid of lengths");
  bn.model.add(bc, true);
  bc->add_option("--T", bn.Ts, "comma-separated lengths");
  bc->add_option("--truncation", bn.Ds, "comma-separated caps ('none' for exact)");
  bc->add_option("--seed", bn.seed, "random seed");
  bc->add_option("--repeats", bn.repeats, "timing repeats (minimum is kept)");
  bc->add_option("--out", bn.out, "output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*f) return cmd_fit(fit);
    if (*sc) return cmd_smooth(sm);
    if (*cc) return cmd_classify(cl);
    if (*dc) return cmd_detrend(dt);
    if (*vc) return cmd_verify(vf);
    if (*bc) return cmd_bench(bn);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
