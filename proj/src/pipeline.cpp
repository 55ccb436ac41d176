#include "mrs/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>
#include <sstream>

#include "mrs/csv.hpp"
#include "mrs/errors.hpp"

namespace mrs {

using namespace std::chrono;

Day parse_day(std::string_view stamp) {
  int y = 0;
  unsigned m = 0, d = 0;
  std::string s(stamp.substr(0, std::min<std::size_t>(stamp.size(), 10)));
  char tail = 0;
  if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3)
    throw ValidationError("bad date '" + std::string(stamp) + "' (expected YYYY-MM-DD)");
  if (stamp.size() > 10 && stamp[10] != 'T' && stamp[10] != ' ')
    throw ValidationError("bad timestamp '" + std::string(stamp) + "'");
  year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw ValidationError("invalid calendar date '" + std::string(stamp) + "'");
  return sys_days{ymd};
}

std::string format_day(Day d) {
  year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int weekday_index(Day d) { return static_cast<int>(weekday{d}.iso_encoding()) - 1; }

IntradaySeries read_prices(const std::string& path) {
  CsvTable t = read_csv(path);
  int ts = t.column("timestamp");
  if (ts < 0) throw ValidationError(path + ": missing column 'timestamp'");
  IntradaySeries s;
  s.values = t.numeric_column("price");
  for (const auto& row : t.rows) s.days.push_back(parse_day(row[ts]));
  return s;
}

PriceSeries read_daily(const std::string& path) {
  CsvTable t = read_csv(path);
  int dc = t.column("date");
  if (dc < 0) throw ValidationError(path + ": missing column 'date'");
  PriceSeries s;
  s.values = t.numeric_column("price");
  for (const auto& row : t.rows) s.days.push_back(parse_day(row[dc]));
  for (std::size_t i = 1; i < s.days.size(); ++i)
    if (s.days[i] <= s.days[i - 1]) throw ValidationError(path + ": dates must be strictly increasing");
  return s;
}

DailyAverage daily_average(const IntradaySeries& p, int warn_below) {
  if (p.days.size() != p.values.size()) throw ValidationError("timestamps and prices differ in length");
  if (p.days.empty()) throw ValidationError("no prices");
  DailyAverage out;
  std::size_t i = 0;
  while (i < p.days.size()) {
    Day d = p.days[i];
    if (!out.daily.days.empty() && d != out.daily.days.back() + days{1}) {
      if (d < out.daily.days.back()) throw ValidationError("timestamps are not in order at " + format_day(d));
      throw ValidationError("no observations on " + format_day(out.daily.days.back() + days{1}));
    }
    double sum = 0.0;
    int n = 0;
    for (; i < p.days.size() && p.days[i] == d; ++i, ++n) sum += p.values[i];
    if (n < warn_below) {
      std::ostringstream os;
      os << format_day(d) << ": only " << n << " observations";
      out.warnings.push_back(os.str());
    }
    out.daily.days.push_back(d);
    out.daily.values.push_back(sum / n);
  }
  return out;
}

std::vector<double> moving_average_trend(const std::vector<double>& y, int window) {
  if (window < 2 || window % 2) throw ValidationError("moving-average window must be even and >= 2");
  const long n = static_cast<long>(y.size());
  const long half = window / 2;
  std::vector<double> h(n);
  for (long t = 0; t < n; ++t) {
    double s = 0.0, w = 0.0;
    for (long j = -half; j <= half; ++j) {
      long u = t + j;
      if (u < 0 || u >= n) continue;
      double wt = (j == -half || j == half) ? 0.5 : 1.0;
      s += wt * y[u];
      w += wt;
    }
    h[t] = s / w;
  }
  return h;
}

TrendModel fit_trend(const std::vector<double>& y, const std::vector<int>& weekday, const LongTermSmoother& smoother,
                     const std::string& method) {
  const std::size_t n = y.size();
  TrendModel m;
  m.weekday = weekday;
  m.method = method;
  std::vector<double> r(n);
  for (int it = 0; it < 1000; ++it) {
    for (std::size_t t = 0; t < n; ++t) r[t] = y[t] - m.weekday_betas[weekday[t]];
    m.longterm = smoother(r);
    std::array<double, 7> sum{}, cnt{};
    for (std::size_t t = 0; t < n; ++t) {
      sum[weekday[t]] += y[t] - m.longterm[t];
      cnt[weekday[t]] += 1.0;
    }
    std::array<double, 7> beta{};
    double mean = 0.0;
    int present = 0;
    for (int d = 0; d < 7; ++d) {
      if (cnt[d] > 0) {
        beta[d] = sum[d] / cnt[d];
        mean += beta[d];
        ++present;
      }
    }
    mean /= present;
    double change = 0.0;
    for (int d = 0; d < 7; ++d) {
      if (cnt[d] > 0) beta[d] -= mean;
      change = std::max(change, std::abs(beta[d] - m.weekday_betas[d]));
    }
    m.weekday_betas = beta;
    if (change < 1e-13) break;
  }
  for (std::size_t t = 0; t < n; ++t) r[t] = y[t] - m.weekday_betas[weekday[t]];
  m.longterm = smoother(r);
  return m;
}

namespace {

double pop_sd(const std::vector<double>& e) {
  double m = std::accumulate(e.begin(), e.end(), 0.0) / e.size();
  double s = 0.0;
  for (double v : e) s += (v - m) * (v - m);
  return std::sqrt(s / e.size());
}

}  // namespace

DetrendResult rfp_detrend(const PriceSeries& daily, const RfpConfig& config) {
  const std::size_t n = daily.values.size();
  if (n < 14) throw ValidationError("detrending needs at least 14 days");
  if (daily.days.size() != n) throw ValidationError("dates and prices differ in length");
  for (double v : daily.values)
    if (!std::isfinite(v)) throw ValidationError("prices must be finite");
  LongTermSmoother smoother = config.smoother;
  if (!smoother) {
    int w = config.window;
    smoother = [w](const std::vector<double>& y) { return moving_average_trend(y, w); };
  }
  std::vector<int> wd(n);
  for (std::size_t t = 0; t < n; ++t) wd[t] = weekday_index(daily.days[t]);

  DetrendResult out;
  std::vector<double> cur = daily.values;
  std::vector<char> done(n, 0);
  const int passes = config.iterate ? config.max_passes : 1;
  for (int pass = 0; pass < passes; ++pass) {
    TrendModel tm = fit_trend(cur, wd, smoother, config.method);
    std::vector<double> e(n);
    for (std::size_t t = 0; t < n; ++t) e[t] = cur[t] - tm.g(t) - tm.longterm[t];
    double sd = pop_sd(e);
    if (!(sd > 0.0) || !std::isfinite(sd)) {
      out.warnings.push_back("residuals have no spread; no prices replaced");
      break;
    }
    bool any = false;
    for (std::size_t t = 0; t < n; ++t) {
      if (done[t] || !(std::abs(e[t]) > config.threshold_sd * sd)) continue;
      cur[t] = tm.g(t) + tm.longterm[t];
      done[t] = 1;
      out.replaced.push_back(t);
      any = true;
    }
    if (!any) break;
  }
  std::sort(out.replaced.begin(), out.replaced.end());
  out.trend = fit_trend(cur, wd, smoother, config.method);
  out.x.resize(n);
  for (std::size_t t = 0; t < n; ++t) out.x[t] = daily.values[t] - out.trend.g(t) - out.trend.longterm[t];
  return out;
}

std::vector<int> classify(const std::vector<std::vector<double>>& rm, int regime, double threshold) {
  std::vector<int> out(rm.size(), 0);
  for (std::size_t t = 0; t < rm.size(); ++t) {
    if (regime < 0 || regime >= static_cast<int>(rm[t].size())) throw ValidationError("regime index out of range");
    out[t] = rm[t][regime] > threshold ? 1 : 0;
  }
  return out;
}

std::vector<int> classify(const SmoothedResult& s, int regime, double threshold) {
  return classify(s.regime_marginal, regime, threshold);
}

double bic(double loglik, int n_params, std::size_t n_obs) {
  if (n_obs < 1) throw ValidationError("BIC needs at least one observation");
  return -2.0 * loglik + n_params * std::log(static_cast<double>(n_obs));
}

double quantile_type7(std::vector<double> v, double p) {
  if (v.empty()) throw ValidationError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile level must lie in [0, 1]");
  std::sort(v.begin(), v.end());
  double h = (v.size() - 1) * p;
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

std::string_view to_string(Candidate c) {
  switch (c) {
    case Candidate::M1LN: return "M1-LN";
    case Candidate::M1Gamma: return "M1-Gamma";
    case Candidate::M2LN: return "M2-LN";
    case Candidate::M2Gamma: return "M2-Gamma";
  }
  return "?";
}

Candidate candidate_from_string(std::string_view name) {
  for (Candidate c : all_candidates())
    if (to_string(c) == name) return c;
  throw ValidationError("unknown candidate '" + std::string(name) + "'");
}

std::vector<Candidate> all_candidates() {
  return {Candidate::M1LN, Candidate::M1Gamma, Candidate::M2LN, Candidate::M2Gamma};
}

namespace {

void moments(const std::vector<double>& v, double& mean, double& var) {
  mean = v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  var = 0.0;
  for (double a : v) var += (a - mean) * (a - mean);
  var = v.size() > 1 ? var / v.size() : 0.0;
}

RegimeSpec tail_regime(const std::vector<double>& x, double q, int sign, bool gamma) {
  std::vector<double> y, ly;
  for (double v : x) {
    double d = sign * (v - q);
    if (d > 0.0) {
      y.push_back(d);
      ly.push_back(std::log(d));
    }
  }
  double m = 0.0, s2 = 0.0;
  if (gamma) {
    moments(y, m, s2);
    if (!(m > 0.0) || !(s2 > 0.0)) return RegimeSpec::shifted_gamma(1.0, 1.0, q, sign);
    return RegimeSpec::shifted_gamma(m * m / s2, s2 / m, q, sign);
  }
  moments(ly, m, s2);
  return RegimeSpec::shifted_lognormal(m, s2 > 1e-2 ? s2 : 1.0, q, sign);
}

}  // namespace

MrsModel candidate_start(Candidate c, const std::vector<double>& x) {
  const double q1 = quantile_type7(x, 0.25), q3 = quantile_type7(x, 0.75);
  const bool drop = c == Candidate::M2LN || c == Candidate::M2Gamma;
  const bool gamma = c == Candidate::M1Gamma || c == Candidate::M2Gamma;
  std::vector<double> mid;
  for (double v : x)
    if (v <= q3 && (!drop || v >= q1)) mid.push_back(v);
  double m = 0.0, v = 0.0;
  moments(mid, m, v);
  if (!(v > 0.0)) v = 1.0;
  const double phi = 0.5;
  MrsModel model;
  model.regimes.push_back(RegimeSpec::ar1(m * (1.0 - phi), phi, v * (1.0 - phi * phi)));
  model.regimes.push_back(tail_regime(x, q3, 1, gamma));
  if (drop) {
    model.regimes.push_back(tail_regime(x, q1, -1, false));
    model.P = Matrix(3, 3);
    const double rows[3][3] = {{0.9, 0.05, 0.05}, {0.5, 0.4, 0.1}, {0.5, 0.1, 0.4}};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) model.P(i, j) = rows[i][j];
    model.pi = {0.8, 0.1, 0.1};
  } else {
    model.P = Matrix(2, 2);
    model.P(0, 0) = 0.9;
    model.P(0, 1) = 0.1;
    model.P(1, 0) = 0.5;
    model.P(1, 1) = 0.5;
    model.pi = {0.9, 0.1};
  }
  return model;
}

std::vector<CandidateReport> fit_candidates(const std::vector<double>& x, const std::vector<Candidate>& candidates,
                                            const EmConfig& config) {
  std::vector<std::future<CandidateReport>> jobs;
  for (Candidate c : candidates) {
    jobs.push_back(std::async(std::launch::async, [c, &x, &config]() {
      CandidateReport r;
      r.candidate = c;
      try {
        MrsModel start = candidate_start(c, x);
        r.fit = multistart(x, start, config);
        r.n_params = num_free_parameters(r.fit.theta_hat);
        r.bic = bic(r.fit.loglik, r.n_params, x.size());
        r.ok = true;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      return r;
    }));
  }
  std::vector<CandidateReport> out;
  for (auto& j : jobs) out.push_back(j.get());
  std::stable_sort(out.begin(), out.end(), [](const CandidateReport& a, const CandidateReport& b) {
    if (a.ok != b.ok) return a.ok;
    return a.ok && a.bic < b.bic;
  });
  return out;
}

}  // namespace mrs
