#include "mrs/em.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "mrs/densities.hpp"
#include "mrs/errors.hpp"
#include "mrs/forward.hpp"

namespace mrs {

namespace {

constexpr double kPhiEdge = 1e-6;
constexpr int kPhiGrid = 64;
constexpr double kLog2Pi = 1.8378770664093454836;

double total(const std::vector<double>& w) {
  double s = 0.0;
  for (double v : w) s += v;
  return s;
}

void check_weights(const std::vector<double>& w, const std::vector<double>& x, int regime = -1) {
  if (w.size() != x.size()) throw ValidationError("weights and observations differ in length");
  if (!(total(w) > 0.0)) throw DegenerateRegimeError(regime, "regime has no posterior weight");
}

// Weighted sums of one lag group.
struct LagGroup {
  double w = 0.0, sx = 0.0, sl = 0.0, sxx = 0.0, sxl = 0.0, sll = 0.0;
};

struct Ar1Sums {
  std::vector<LagGroup> lag;  // index m >= 1
  LagGroup far;
  double w = 0.0;
};

Ar1Sums ar1_sums(const std::vector<std::vector<double>>& lag, const std::vector<double>& x) {
  if (lag.size() != x.size()) throw ValidationError("weights and observations differ in length");
  Ar1Sums s;
  for (std::size_t t = 0; t < lag.size(); ++t) {
    const auto& wt = lag[t];
    if (wt.size() > s.lag.size()) s.lag.resize(wt.size());
    double xt = x[t];
    for (std::size_t c = 0; c < wt.size(); ++c) {
      double w = wt[c];
      if (w == 0.0) continue;
      s.w += w;
      if (c == 0) {
        s.far.w += w;
        s.far.sx += w * xt;
        s.far.sxx += w * xt * xt;
        continue;
      }
      if (c > t) throw ValidationError("lag weight beyond the start of the series");
      double xl = x[t - c];
      LagGroup& g = s.lag[c];
      g.w += w;
      g.sx += w * xt;
      g.sl += w * xl;
      g.sxx += w * xt * xt;
      g.sxl += w * xt * xl;
      g.sll += w * xl * xl;
    }
  }
  return s;
}

struct ProfileTerms {
  double num = 0.0;    // sum w a y / v
  double den = 0.0;    // sum w a^2 / v
  double y2 = 0.0;     // sum w y^2 / v
  double logv = 0.0;   // sum w log v
};

ProfileTerms profile_terms(const Ar1Sums& s, double phi) {
  ProfileTerms r;
  double p = 1.0, a = 0.0, v = 0.0;
  for (std::size_t m = 1; m < s.lag.size(); ++m) {
    p *= phi;
    a = 1.0 + phi * a;
    v = 1.0 + phi * phi * v;
    const LagGroup& g = s.lag[m];
    if (g.w == 0.0) continue;
    double sy = g.sx - p * g.sl;
    double syy = g.sxx - 2.0 * p * g.sxl + p * p * g.sll;
    r.num += a * sy / v;
    r.den += g.w * a * a / v;
    r.y2 += syy / v;
    r.logv += g.w * std::log(v);
  }
  if (s.far.w > 0.0) {
    // m -> infinity: a = 1/(1-phi), v = 1/(1-phi^2), y = x_t.
    r.num += (1.0 + phi) * s.far.sx;
    r.den += s.far.w * (1.0 + phi) / (1.0 - phi);
    r.y2 += (1.0 - phi * phi) * s.far.sxx;
    r.logv -= s.far.w * std::log1p(-phi * phi);
  }
  return r;
}

double profile_value(const Ar1Sums& s, double phi, double floor, double* alpha = nullptr,
                     double* sigma2 = nullptr) {
  ProfileTerms r = profile_terms(s, phi);
  double al = r.num / r.den;
  double rss = std::max(0.0, r.y2 - r.num * al);
  double s2 = std::max(rss / s.w, floor);
  if (alpha) *alpha = al;
  if (sigma2) *sigma2 = s2;
  if (!(s2 > 0.0)) return -std::numeric_limits<double>::infinity();
  return -0.5 * r.logv - 0.5 * s.w * std::log(s2) - 0.5 * rss / s2;
}

double refine_phi(const Ar1Sums& s, double lo, double hi, double floor) {
  auto neg = [&](double phi) { return -profile_value(s, phi, floor); };
  std::uintmax_t iters = 500;
  auto r = boost::math::tools::brent_find_minima(neg, lo, hi, std::numeric_limits<double>::digits,
                                                 iters);
  return r.first;
}

// Exact (unfloored) alpha and sigma2 at phi by a direct pass over the data.
void ar1_closed_form(const std::vector<std::vector<double>>& lag, const std::vector<double>& x, double phi,
                     double& alpha, double& sigma2) {
  std::size_t L = 0;
  for (const auto& wt : lag) L = std::max(L, wt.size());
  std::vector<double> pm(L + 1), am(L + 1), vm(L + 1);
  pm[0] = 1.0;
  for (std::size_t m = 1; m <= L; ++m) {
    pm[m] = phi * pm[m - 1];
    am[m] = 1.0 + phi * am[m - 1];
    vm[m] = 1.0 + phi * phi * vm[m - 1];
  }
  const double af = 1.0 / (1.0 - phi), vf = 1.0 / (1.0 - phi * phi);
  double num = 0.0, den = 0.0, w = 0.0;
  for (std::size_t t = 0; t < lag.size(); ++t) {
    for (std::size_t c = 0; c < lag[t].size(); ++c) {
      double wt = lag[t][c];
      if (wt == 0.0) continue;
      double a = c ? am[c] : af, v = c ? vm[c] : vf;
      double y = c ? x[t] - pm[c] * x[t - c] : x[t];
      num += wt * a * y / v;
      den += wt * a * a / v;
      w += wt;
    }
  }
  alpha = num / den;
  double rss = 0.0;
  for (std::size_t t = 0; t < lag.size(); ++t) {
    for (std::size_t c = 0; c < lag[t].size(); ++c) {
      double wt = lag[t][c];
      if (wt == 0.0) continue;
      double a = c ? am[c] : af, v = c ? vm[c] : vf;
      double y = c ? x[t] - pm[c] * x[t - c] : x[t];
      double d = y - alpha * a;
      rss += wt * d * d / v;
    }
  }
  sigma2 = rss / w;
}

IidUpdate weighted_moments(const std::vector<double>& w, const std::vector<double>& y, double floor) {
  double W = 0.0, s = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    if (w[t] == 0.0) continue;
    W += w[t];
    s += w[t] * y[t];
  }
  IidUpdate u;
  u.mu = s / W;
  double ss = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    if (w[t] == 0.0) continue;
    double d = y[t] - u.mu;
    ss += w[t] * d * d;
  }
  double v = ss / W;
  u.floored = v < floor;
  u.sigma2 = std::max(v, floor);
  return u;
}

std::vector<double> shifted_values(const std::vector<double>& w, const std::vector<double>& x, double q,
                                   int sign) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (w[t] == 0.0) continue;
    double v = sign * (x[t] - q);
    if (!(v > 0.0)) {
      std::ostringstream os;
      os << "observation at t = " << t << " has positive weight but lies outside the support";
      throw NumericalError(os.str());
    }
    y[t] = v;
  }
  return y;
}

// Maximizes sum_j c_j log p_j over the simplex with p_j in [delta, 1 - delta].
std::vector<double> constrained_row(const std::vector<double>& c, double delta, bool& at_bound) {
  const std::size_t M = c.size();
  double sum = std::accumulate(c.begin(), c.end(), 0.0);
  std::vector<double> p(M);
  for (std::size_t j = 0; j < M; ++j) p[j] = c[j] / sum;
  at_bound = false;
  if (delta <= 0.0 || M == 1) return p;
  bool inside = std::all_of(p.begin(), p.end(), [&](double v) { return v >= delta && v <= 1.0 - delta; });
  if (inside) return p;
  at_bound = true;
  // p_j = clamp(s c_j / sum); the total is nondecreasing in s.
  auto fill = [&](double s) {
    double tot = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      p[j] = std::clamp(s * c[j] / sum, delta, 1.0 - delta);
      tot += p[j];
    }
    return tot;
  };
  double lo = 0.0, hi = 1.0;
  while (fill(hi) < 1.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (fill(mid) < 1.0) lo = mid;
    else hi = mid;
  }
  double tot = fill(hi);
  for (double& v : p) v /= tot;
  return p;
}

}  // namespace

std::vector<Violation> validate(const EmConfig& c, int num_ar) {
  std::vector<Violation> v;
  if (!(c.tol > 0.0)) v.push_back({"tol", "must be > 0"});
  if (c.max_iters < 1) v.push_back({"max_iters", "must be >= 1"});
  if (c.restarts < 1) v.push_back({"restarts", "must be >= 1"});
  if (c.truncation_D && *c.truncation_D <= num_ar)
    v.push_back({"truncation_D", "must exceed the number of AR1 regimes"});
  if (c.sigma2_floor && !(*c.sigma2_floor > 0.0)) v.push_back({"sigma2_floor", "must be > 0"});
  if (!(c.delta >= 0.0 && c.delta < 0.5)) v.push_back({"delta", "must lie in [0, 0.5)"});
  if (c.threads < 0) v.push_back({"threads", "must be >= 0"});
  return v;
}

double sample_variance(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double m = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / x.size();
}

Guards resolve_guards(const EmConfig& c, const std::vector<double>& x) {
  Guards g;
  if (!c.guards) {
    g.sigma2_floor = std::numeric_limits<double>::min();
    g.delta = 0.0;
    return g;
  }
  double var = sample_variance(x);
  g.sigma2_floor = c.sigma2_floor ? *c.sigma2_floor : 1e-8 * (var > 0.0 ? var : 1.0);
  g.delta = c.delta;
  return g;
}

EmSufficientStats collect_stats(const SmoothedResult& sm) {
  EmSufficientStats s;
  const std::size_t T = sm.T();
  const int M = sm.M;
  s.T = T;
  s.regime.assign(M, std::vector<double>(T + 1, 0.0));
  for (std::size_t t = 0; t <= T; ++t)
    for (int i = 0; i < M; ++i) s.regime[i][t] = sm.regime_marginal[t][i];
  s.lag.assign(sm.k, std::vector<std::vector<double>>(T + 1));
  for (std::size_t t = 0; t <= T; ++t)
    for (int i = 0; i < sm.k; ++i) s.lag[i][t] = sm.counter[t][i];
  s.transitions = Matrix(M, M, 0.0);
  s.origins.assign(M, 0.0);
  if (sm.pairwise.size() == T + 1) {
    for (std::size_t t = 1; t <= T; ++t)
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) s.transitions(i, j) += sm.pairwise[t](i, j);
  }
  for (std::size_t t = 1; t <= T; ++t)
    for (int i = 0; i < M; ++i) s.origins[i] += sm.regime_marginal[t - 1][i];
  s.initial = sm.regime_marginal[0];
  return s;
}

TransitionUpdate m_step_transitions(const EmSufficientStats& stats, const Matrix& P_old,
                                    const std::vector<double>& pi_old, double delta, bool estimate_pi) {
  const std::size_t M = P_old.rows();
  TransitionUpdate u;
  u.P = P_old;
  for (std::size_t i = 0; i < M; ++i) {
    std::vector<double> c(M);
    double row = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      c[j] = std::max(0.0, stats.transitions(i, j));
      row += c[j];
    }
    if (!(stats.origins[i] > 0.0) || !(row > 0.0)) {
      u.degenerate.push_back(static_cast<int>(i));
      continue;
    }
    bool bound = false;
    std::vector<double> p = constrained_row(c, delta, bound);
    u.at_bound = u.at_bound || bound;
    for (std::size_t j = 0; j < M; ++j) u.P(i, j) = p[j];
  }
  if (estimate_pi) {
    u.pi = stats.initial;
    double s = std::accumulate(u.pi.begin(), u.pi.end(), 0.0);
    for (double& v : u.pi) v /= s;
  } else {
    u.pi = pi_old;
  }
  return u;
}

IidUpdate m_step_normal(const std::vector<double>& w, const std::vector<double>& x, double floor) {
  check_weights(w, x);
  return weighted_moments(w, x, floor);
}

IidUpdate m_step_lognormal(const std::vector<double>& w, const std::vector<double>& x, double q, int sign,
                           double floor) {
  check_weights(w, x);
  std::vector<double> y = shifted_values(w, x, q, sign);
  for (std::size_t t = 0; t < y.size(); ++t)
    if (w[t] != 0.0) y[t] = std::log(y[t]);
  return weighted_moments(w, y, floor);
}

double gamma_profile(double shape, const std::vector<double>& w, const std::vector<double>& x, double q,
                     int sign) {
  std::vector<double> y = shifted_values(w, x, q, sign);
  double W = 0.0, sy = 0.0, sly = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    if (w[t] == 0.0) continue;
    W += w[t];
    sy += w[t] * y[t];
    sly += w[t] * std::log(y[t]);
  }
  double scale = sy / W / shape;
  return -W * shape * std::log(scale) - W * log_gamma(shape) + (shape - 1.0) * sly - sy / scale;
}

IidUpdate m_step_gamma(const std::vector<double>& w, const std::vector<double>& x, double q, int sign) {
  check_weights(w, x);
  std::vector<double> y = shifted_values(w, x, q, sign);
  double W = 0.0, sy = 0.0, sly = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    if (w[t] == 0.0) continue;
    W += w[t];
    sy += w[t] * y[t];
    sly += w[t] * std::log(y[t]);
  }
  const double mean = sy / W;
  const double c = std::log(mean) - sly / W;
  auto h = [c](double mu) { return std::log(mu) - boost::math::digamma(mu) - c; };
  if (!(c > 0.0) || h(kGammaShapeMax) >= 0.0) {
    std::ostringstream os;
    os << "gamma shape search reached the upper guard " << kGammaShapeMax
       << " (weighted data has no spread)";
    throw NumericalError(os.str());
  }
  double lo = 1e-3;
  while (h(lo) <= 0.0) {
    lo *= 0.5;
    if (lo < 1e-300) throw NumericalError("gamma shape search could not bracket the root from below");
  }
  double hi = 1.0;
  while (h(hi) > 0.0) hi *= 2.0;
  if (hi > kGammaShapeMax) hi = kGammaShapeMax;
  if (lo >= hi) lo = hi / 2.0;
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(h, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  if (iters >= 200) {
    std::ostringstream os;
    os << "gamma shape search did not converge in 200 iterations, bracket [" << r.first << ", " << r.second
       << "]";
    throw NumericalError(os.str());
  }
  IidUpdate u;
  u.mu = 0.5 * (r.first + r.second);
  u.sigma2 = mean / u.mu;
  return u;
}

double ar1_profile(const std::vector<std::vector<double>>& lag, const std::vector<double>& x, double phi,
                   double floor) {
  Ar1Sums s = ar1_sums(lag, x);
  return profile_value(s, phi, floor) - 0.5 * kLog2Pi * s.w;
}

double ar1_expected_loglik(const std::vector<std::vector<double>>& lag, const std::vector<double>& x,
                           double alpha, double phi, double sigma2) {
  RegimeSpec r = RegimeSpec::ar1(alpha, phi, sigma2);
  double s = 0.0;
  for (std::size_t t = 0; t < lag.size(); ++t) {
    for (std::size_t c = 0; c < lag[t].size(); ++c) {
      double w = lag[t][c];
      if (w == 0.0) continue;
      double ld = c ? ar1_mstep_log_density(x[t], x[t - c], static_cast<int>(c), alpha, phi, sigma2)
                    : stationary_log_density(x[t], r);
      s += w * ld;
    }
  }
  return s;
}

Ar1Update m_step_ar1(const std::vector<std::vector<double>>& lag, const std::vector<double>& x, double floor,
                     std::optional<double> phi_start) {
  Ar1Sums s = ar1_sums(lag, x);
  if (!(s.w > 0.0)) throw DegenerateRegimeError(-1, "AR1 regime has no posterior weight");

  const double lo = -1.0 + kPhiEdge, hi = 1.0 - kPhiEdge;
  const double step = (hi - lo) / (kPhiGrid - 1);
  int best = 0;
  double best_g = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < kPhiGrid; ++j) {
    double phi = lo + j * step;
    double g = profile_value(s, phi, floor);
    if (!std::isfinite(g)) {
      std::ostringstream os;
      os << "AR1 profile objective is not finite at phi = " << phi;
      throw NumericalError(os.str());
    }
    if (g > best_g) {
      best_g = g;
      best = j;
    }
  }
  double a = std::max(lo, lo + (best - 1) * step), b = std::min(hi, lo + (best + 1) * step);
  double phi = refine_phi(s, a, b, floor);
  double g = profile_value(s, phi, floor);
  if (phi_start && *phi_start > lo && *phi_start < hi) {
    double p0 = *phi_start;
    double g0 = profile_value(s, p0, floor);
    double p1 = refine_phi(s, std::max(lo, p0 - step), std::min(hi, p0 + step), floor);
    double g1 = profile_value(s, p1, floor);
    if (g1 < g0) {
      p1 = p0;
      g1 = g0;
    }
    if (g1 > g) {
      phi = p1;
      g = g1;
    }
  }

  Ar1Update u;
  u.phi = phi;
  double s2 = 0.0;
  ar1_closed_form(lag, x, phi, u.alpha, s2);
  u.floored = !(s2 >= floor);
  u.sigma2 = std::max(s2, floor);
  return u;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::LoglikIncreaseBelowTol: return "loglik-increase-below-tol";
    case Termination::StepBelowTol: return "step-below-tol";
    case Termination::MaxIters: return "max-iters";
    case Termination::BoundaryGuard: return "boundary-guard";
    case Termination::NonFinite: return "non-finite";
  }
  return "unknown";
}

MrsModel project_to_guards(const MrsModel& model, const Guards& g) {
  MrsModel m = model;
  for (auto& r : m.regimes) {
    if (r.kind != RegimeKind::IidShiftedGamma) r.sigma2 = std::max(r.sigma2, g.sigma2_floor);
  }
  if (g.delta > 0.0) {
    const std::size_t M = m.P.rows();
    for (std::size_t i = 0; i < M; ++i) {
      std::vector<double> c(M);
      for (std::size_t j = 0; j < M; ++j) c[j] = m.P(i, j);
      bool b = false;
      std::vector<double> p = constrained_row(c, g.delta, b);
      for (std::size_t j = 0; j < M; ++j) m.P(i, j) = p[j];
    }
  }
  return m;
}

MStepResult m_step(const MrsModel& theta, const SmoothedResult& sm, const std::vector<double>& x,
                   const Guards& g, bool estimate_pi) {
  EmSufficientStats st = collect_stats(sm);
  MStepResult out;
  out.theta = theta;
  for (int i = 0; i < theta.num_regimes(); ++i) {
    const RegimeSpec& r = theta.regimes[i];
    RegimeSpec& n = out.theta.regimes[i];
    try {
      switch (r.kind) {
        case RegimeKind::AR1: {
          Ar1Update u = m_step_ar1(st.lag[i], x, g.sigma2_floor, r.phi);
          n.alpha = u.alpha;
          n.phi = u.phi;
          n.sigma2 = u.sigma2;
          out.at_bound = out.at_bound || u.floored;
          break;
        }
        case RegimeKind::IidNormal: {
          IidUpdate u = m_step_normal(st.regime[i], x, g.sigma2_floor);
          n.mu = u.mu;
          n.sigma2 = u.sigma2;
          out.at_bound = out.at_bound || u.floored;
          break;
        }
        case RegimeKind::IidShiftedLogNormal: {
          IidUpdate u = m_step_lognormal(st.regime[i], x, r.q, r.sign, g.sigma2_floor);
          n.mu = u.mu;
          n.sigma2 = u.sigma2;
          out.at_bound = out.at_bound || u.floored;
          break;
        }
        case RegimeKind::IidShiftedGamma: {
          IidUpdate u = m_step_gamma(st.regime[i], x, r.q, r.sign);
          n.mu = u.mu;
          n.sigma2 = u.sigma2;
          break;
        }
      }
    } catch (const DegenerateRegimeError& e) {
      throw DegenerateRegimeError(i, "regime " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  TransitionUpdate tu = m_step_transitions(st, theta.P, theta.pi, g.delta, estimate_pi);
  out.theta.P = tu.P;
  out.theta.pi = tu.pi;
  out.at_bound = out.at_bound || tu.at_bound;
  return out;
}

namespace {

bool all_finite(const MrsModel& m) {
  for (double v : flatten_parameters(m))
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

FitReport em_fit(const MrsModel& model0, const std::vector<double>& x, const EmConfig& config) {
  require_observations(x);
  require_valid(model0);
  auto cv = validate(config, model0.num_ar());
  if (!cv.empty()) throw ValidationError("invalid EM configuration: " + cv.front().field + " " + cv.front().message);
  const Guards g = resolve_guards(config, x);

  FitReport rep;
  MrsModel theta = project_to_guards(model0, g);
  ForwardResult fwd = forward_normalized(theta, x, config.truncation_D);
  rep.loglik_trajectory.push_back(fwd.loglik);
  double ll = fwd.loglik;
  bool at_bound = false;
  bool converged = false;
  rep.termination = Termination::MaxIters;

  for (int it = 1; it <= config.max_iters; ++it) {
    SmoothedResult sm = smooth(theta, fwd);
    MStepResult ms = m_step(theta, sm, x, g, config.estimate_pi);
    if (!all_finite(ms.theta) || !validate(ms.theta).empty()) {
      rep.termination = Termination::NonFinite;
      break;
    }
    ForwardResult next = forward_normalized(ms.theta, x, config.truncation_D);
    if (!std::isfinite(next.loglik)) {
      rep.termination = Termination::NonFinite;
      break;
    }
    double step = sup_distance(theta, ms.theta);
    theta = std::move(ms.theta);
    fwd = std::move(next);
    at_bound = ms.at_bound;
    rep.iterations = it;
    rep.loglik_trajectory.push_back(fwd.loglik);
    double gain = fwd.loglik - ll;
    ll = fwd.loglik;
    if (step < config.tol) {
      rep.termination = Termination::StepBelowTol;
      converged = true;
      break;
    }
    if (gain < config.tol) {
      rep.termination = Termination::LoglikIncreaseBelowTol;
      converged = true;
      break;
    }
  }
  if (converged && at_bound) rep.termination = Termination::BoundaryGuard;
  rep.theta_hat = theta;
  rep.loglik = ll;
  RestartResult rr;
  rr.seed = config.seed;
  rr.start = model0;
  rr.theta = theta;
  rr.loglik = ll;
  rr.iterations = rep.iterations;
  rr.termination = rep.termination;
  rr.trajectory = rep.loglik_trajectory;
  rep.per_restart.push_back(std::move(rr));
  return rep;
}

std::mt19937_64 restart_rng(std::uint64_t seed, std::uint64_t restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart), static_cast<std::uint32_t>(restart >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

MrsModel sample_start(std::mt19937_64& rng, const MrsModel& templ) {
  std::uniform_real_distribution<double> u11(-1.0, 1.0), u01(0.0, 1.0);
  auto positive = [&](double hi) {
    double v = 0.0;
    while (!(v > 0.0)) v = hi * u01(rng);
    return v;
  };
  MrsModel m = templ;
  for (auto& r : m.regimes) {
    if (r.is_ar()) {
      r.alpha = u11(rng);
      do r.phi = u11(rng);
      while (!(std::abs(r.phi) < 1.0));
      r.sigma2 = positive(4.0);
    } else if (r.kind == RegimeKind::IidShiftedGamma) {
      r.mu = positive(8.0);
      r.sigma2 = positive(4.0);
    } else {
      r.mu = 8.0 * u01(rng);
      r.sigma2 = positive(4.0);
    }
  }
  const std::size_t M = m.P.rows();
  for (std::size_t i = 0; i < M; ++i) {
    double pii = M == 1 ? 1.0 : u01(rng);
    for (std::size_t j = 0; j < M; ++j) m.P(i, j) = i == j ? pii : (1.0 - pii) / (M - 1);
  }
  return m;
}

MrsModel order_ar_by_phi(const MrsModel& model) {
  const int k = model.num_ar();
  std::vector<int> perm(model.num_regimes());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.begin() + k,
                   [&](int a, int b) { return model.regimes[a].phi > model.regimes[b].phi; });
  return permute_regimes(model, perm);
}

FitReport multistart(const std::vector<double>& x, const MrsModel& templ, const EmConfig& config,
                     const MultistartOptions& options, const FitFunction& fit) {
  auto cv = validate(config, templ.num_ar());
  if (!cv.empty()) throw ValidationError("invalid EM configuration: " + cv.front().field + " " + cv.front().message);
  const int R = config.restarts;
  std::vector<MrsModel> starts(R);
  for (int r = 0; r < R; ++r) {
    if (r == 0 && options.first_from_template) {
      starts[r] = templ;
    } else {
      std::mt19937_64 rng = restart_rng(config.seed, static_cast<std::uint64_t>(r));
      starts[r] = options.sampler(rng, templ);
    }
  }

  std::vector<FitReport> reports(R);
  std::vector<std::string> errors(R);
  std::vector<char> failed(R, 0);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int r = next++; r < R; r = next++) {
      try {
        reports[r] = fit(starts[r], x, config);
      } catch (const std::exception& e) {
        failed[r] = 1;
        errors[r] = e.what();
      }
    }
  };
  int nthreads = config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::clamp(nthreads, 1, R);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  FitReport out;
  int best = -1;
  for (int r = 0; r < R; ++r) {
    RestartResult rr;
    rr.seed = config.seed;
    rr.start = starts[r];
    if (failed[r]) {
      rr.failed = true;
      rr.error = errors[r];
    } else {
      rr.theta = order_ar_by_phi(reports[r].theta_hat);
      rr.loglik = reports[r].loglik;
      rr.iterations = reports[r].iterations;
      rr.termination = reports[r].termination;
      rr.trajectory = reports[r].loglik_trajectory;
      if (std::isfinite(rr.loglik) && (best < 0 || rr.loglik > reports[best].loglik + 1e-9)) best = r;
    }
    out.per_restart.push_back(std::move(rr));
  }
  if (best < 0) {
    std::string msg = "all " + std::to_string(R) + " restarts failed";
    if (!errors.empty() && !errors[0].empty()) msg += "; first error: " + errors[0];
    throw NumericalError(msg);
  }
  const FitReport& b = reports[best];
  out.theta_hat = out.per_restart[best].theta;
  out.loglik = b.loglik;
  out.loglik_trajectory = b.loglik_trajectory;
  out.iterations = b.iterations;
  out.termination = b.termination;
  out.best_restart = best;
  out.approximate = b.approximate;
  out.algorithm = b.algorithm;
  return out;
}

}  // namespace mrs
