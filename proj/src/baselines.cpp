#include "mrs/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mrs/densities.hpp"
#include "mrs/errors.hpp"
#include "mrs/forward.hpp"

namespace mrs {

namespace {

constexpr double kPhiLimit = 1.0 - 1e-6;

// Hamilton filter over regimes only. logf(t, i) is the conditional log
// density; hook(t, result) runs after the filtered row at t is final.
template <class LogDensity, class Hook>
HamiltonResult regime_forward(const MrsModel& m, std::size_t n, LogDensity&& logf, Hook&& hook) {
  const int M = m.num_regimes();
  HamiltonResult r;
  r.filtered.assign(n, std::vector<double>(M, 0.0));
  r.prediction.assign(n, std::vector<double>(M, 0.0));
  std::vector<double> lf(M);
  for (std::size_t t = 0; t < n; ++t) {
    auto& pred = r.prediction[t];
    if (t == 0) {
      pred = m.pi;
    } else {
      const auto& prev = r.filtered[t - 1];
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) pred[j] += prev[i] * m.P(i, j);
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < M; ++i) {
      lf[i] = pred[i] > 0.0 ? logf(t, i) : -std::numeric_limits<double>::infinity();
      if (pred[i] > 0.0 && lf[i] > mx) mx = lf[i];
    }
    if (!std::isfinite(mx)) {
      std::ostringstream os;
      os << "every regime assigns zero density to x_" << t;
      throw ZeroLikelihoodError(t, os.str());
    }
    double sum = 0.0;
    auto& filt = r.filtered[t];
    for (int i = 0; i < M; ++i) {
      filt[i] = pred[i] > 0.0 ? pred[i] * std::exp(lf[i] - mx) : 0.0;
      sum += filt[i];
    }
    for (double& v : filt) v /= sum;
    r.loglik += mx + std::log(sum);
    hook(t, r);
  }
  return r;
}

bool all_finite(const MrsModel& m) {
  for (double v : flatten_parameters(m))
    if (!std::isfinite(v)) return false;
  return true;
}

EmSufficientStats stats_from_kim(const KimResult& kim) {
  EmSufficientStats s;
  const std::size_t n = kim.smoothed.size();
  const int M = static_cast<int>(kim.smoothed[0].size());
  s.T = n - 1;
  s.regime.assign(M, std::vector<double>(n, 0.0));
  for (std::size_t t = 0; t < n; ++t)
    for (int i = 0; i < M; ++i) s.regime[i][t] = kim.smoothed[t][i];
  s.transitions = Matrix(M, M, 0.0);
  s.origins.assign(M, 0.0);
  for (std::size_t t = 1; t < n; ++t)
    for (int i = 0; i < M; ++i) {
      s.origins[i] += kim.smoothed[t - 1][i];
      for (int j = 0; j < M; ++j) s.transitions(i, j) += kim.pairwise[t](i, j);
    }
  s.initial = kim.smoothed[0];
  return s;
}

IidUpdate iid_update(const RegimeSpec& r, const std::vector<double>& w, const std::vector<double>& x,
                     double floor) {
  switch (r.kind) {
    case RegimeKind::IidNormal: return m_step_normal(w, x, floor);
    case RegimeKind::IidShiftedLogNormal: return m_step_lognormal(w, x, r.q, r.sign, floor);
    case RegimeKind::IidShiftedGamma: return m_step_gamma(w, x, r.q, r.sign);
    case RegimeKind::AR1: break;
  }
  throw ValidationError("not an i.i.d. regime");
}

// Shared EM driver: update(theta) returns the next iterate, loglik(theta)
// the objective it is judged by.
template <class Update, class Loglik>
FitReport run_loop(const MrsModel& start, const EmConfig& config, Layout layout, Update&& update,
                   Loglik&& loglik) {
  FitReport rep;
  MrsModel theta = start;
  double ll = loglik(theta);
  rep.loglik_trajectory.push_back(ll);
  rep.termination = Termination::MaxIters;
  bool at_bound = false, converged = false;
  for (int it = 1; it <= config.max_iters; ++it) {
    MStepResult ms = update(theta);
    if (!all_finite(ms.theta) || !validate(ms.theta, layout).empty()) {
      rep.termination = Termination::NonFinite;
      break;
    }
    double next = loglik(ms.theta);
    if (!std::isfinite(next)) {
      rep.termination = Termination::NonFinite;
      break;
    }
    double step = sup_distance(theta, ms.theta);
    theta = std::move(ms.theta);
    at_bound = ms.at_bound;
    rep.iterations = it;
    rep.loglik_trajectory.push_back(next);
    double gain = next - ll;
    ll = next;
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
  rr.start = start;
  rr.theta = theta;
  rr.loglik = ll;
  rr.iterations = rep.iterations;
  rr.termination = rep.termination;
  rr.trajectory = rep.loglik_trajectory;
  rep.per_restart.push_back(std::move(rr));
  return rep;
}

void check_config(const EmConfig& config, int k) {
  auto cv = validate(config, k);
  if (!cv.empty())
    throw ValidationError("invalid EM configuration: " + cv.front().field + " " + cv.front().message);
}

}  // namespace

double dependent_log_density(const DependentMrsModel& model, const std::vector<double>& x, std::size_t t,
                             int regime) {
  const RegimeSpec& r = model.params.regimes.at(regime);
  if (!r.is_ar()) return iid_log_density(x[t], r);
  if (t == 0) return stationary_log_density(x[0], r);
  return normal_log_density(x[t], r.alpha + r.phi * x[t - 1], r.sigma2);
}

HamiltonResult hamilton_forward(const DependentMrsModel& model, const std::vector<double>& x) {
  require_observations(x);
  require_valid(model.params, Layout::Dependent);
  return regime_forward(
      model.params, x.size(), [&](std::size_t t, int i) { return dependent_log_density(model, x, t, i); },
      [](std::size_t, const HamiltonResult&) {});
}

KimResult kim_backward(const Matrix& P, const HamiltonResult& fwd) {
  const std::size_t n = fwd.filtered.size();
  if (n == 0) throw ValidationError("empty forward result");
  const std::size_t M = fwd.filtered[0].size();
  KimResult k;
  k.smoothed.assign(n, std::vector<double>(M, 0.0));
  k.pairwise.assign(n, Matrix(M, M, 0.0));
  k.smoothed[n - 1] = fwd.filtered[n - 1];
  for (std::size_t t = n - 1; t-- > 0;) {
    const auto& next = k.smoothed[t + 1];
    const auto& pred = fwd.prediction[t + 1];
    std::vector<double> ratio(M, 0.0);
    for (std::size_t i = 0; i < M; ++i) {
      if (next[i] == 0.0) continue;
      if (!(pred[i] > 0.0)) {
        std::ostringstream os;
        os << "smoothed probability of regime " << i + 1 << " at t = " << t + 1
           << " is positive while its prediction is zero";
        throw InconsistencyError(os.str());
      }
      ratio[i] = next[i] / pred[i];
    }
    Matrix& pw = k.pairwise[t + 1];
    auto& sm = k.smoothed[t];
    for (std::size_t j = 0; j < M; ++j) {
      double f = fwd.filtered[t][j];
      if (f == 0.0) continue;
      for (std::size_t i = 0; i < M; ++i) {
        double v = P(j, i) * f * ratio[i];
        pw(j, i) = v;
        sm[j] += v;
      }
    }
  }
  return k;
}

Ar1Regression weighted_ar1_regression(const std::vector<double>& w, const std::vector<double>& y,
                                      const std::vector<double>& lagged) {
  if (w.size() != y.size() || y.size() != lagged.size())
    throw ValidationError("regression inputs differ in length");
  double W = 0.0, my = 0.0, ml = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    W += w[t];
    my += w[t] * y[t];
    ml += w[t] * lagged[t];
  }
  if (!(W > 0.0)) throw DegenerateRegimeError(-1, "regression has no weight");
  my /= W;
  ml /= W;
  double sll = 0.0, sly = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    double dl = lagged[t] - ml;
    sll += w[t] * dl * dl;
    sly += w[t] * dl * (y[t] - my);
  }
  if (!(sll > 0.0)) throw DegenerateRegimeError(-1, "lagged values have no weighted spread");
  Ar1Regression r;
  r.phi = sly / sll;
  r.alpha = my - r.phi * ml;
  double rss = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    double d = y[t] - r.alpha - r.phi * lagged[t];
    rss += w[t] * d * d;
  }
  r.sigma2 = rss / W;
  return r;
}

FitReport dependent_em(const DependentMrsModel& model0, const std::vector<double>& x, const EmConfig& config) {
  require_observations(x);
  require_valid(model0.params, Layout::Dependent);
  check_config(config, 0);
  const Guards g = resolve_guards(config, x);
  const std::size_t n = x.size();

  auto loglik = [&](const MrsModel& theta) { return hamilton_forward(DependentMrsModel{theta}, x).loglik; };
  auto update = [&](const MrsModel& theta) {
    HamiltonResult fwd = hamilton_forward(DependentMrsModel{theta}, x);
    KimResult kim = kim_backward(theta.P, fwd);
    EmSufficientStats st = stats_from_kim(kim);
    MStepResult out;
    out.theta = theta;
    for (int i = 0; i < theta.num_regimes(); ++i) {
      const RegimeSpec& r = theta.regimes[i];
      RegimeSpec& nr = out.theta.regimes[i];
      if (r.is_ar()) {
        // Stationary term at t = 0, one-step regressions afterwards.
        std::vector<std::vector<double>> lag(n);
        lag[0] = {st.regime[i][0]};
        for (std::size_t t = 1; t < n; ++t) lag[t] = {0.0, st.regime[i][t]};
        Ar1Update u = m_step_ar1(lag, x, g.sigma2_floor, r.phi);
        nr.alpha = u.alpha;
        nr.phi = u.phi;
        nr.sigma2 = u.sigma2;
        out.at_bound = out.at_bound || u.floored;
      } else {
        IidUpdate u = iid_update(r, st.regime[i], x, g.sigma2_floor);
        nr.mu = u.mu;
        nr.sigma2 = u.sigma2;
        out.at_bound = out.at_bound || u.floored;
      }
    }
    TransitionUpdate tu = m_step_transitions(st, theta.P, theta.pi, g.delta, config.estimate_pi);
    out.theta.P = tu.P;
    out.theta.pi = tu.pi;
    out.at_bound = out.at_bound || tu.at_bound;
    return out;
  };
  FitReport rep = run_loop(project_to_guards(model0.params, g), config, Layout::Dependent, update, loglik);
  rep.algorithm = "dependent-em";
  return rep;
}

FitReport dependent_em(const MrsModel& model0, const std::vector<double>& x, const EmConfig& config) {
  return dependent_em(DependentMrsModel{model0}, x, config);
}

EmLikeState emlike_forward(const MrsModel& model, const std::vector<double>& x) {
  require_observations(x);
  require_valid(model);
  const int k = model.num_ar();
  EmLikeState st;
  st.b_tilde.assign(x.size(), std::vector<double>(k, 0.0));
  auto logf = [&](std::size_t t, int i) {
    const RegimeSpec& r = model.regimes[i];
    if (!r.is_ar()) return iid_log_density(x[t], r);
    if (t == 0) return stationary_log_density(x[0], r);
    return normal_log_density(x[t], r.alpha + r.phi * st.b_tilde[t - 1][i], r.sigma2);
  };
  auto hook = [&](std::size_t t, const HamiltonResult& h) {
    for (int i = 0; i < k; ++i) {
      double b;
      if (t == 0) {
        b = x[0];
      } else {
        const RegimeSpec& r = model.regimes[i];
        b = h.filtered[t][i] * x[t] + (1.0 - h.prediction[t][i]) * (r.alpha + r.phi * st.b_tilde[t - 1][i]);
      }
      if (!std::isfinite(b) || std::abs(b) > kEmLikeDivergence) {
        std::ostringstream os;
        os << "approximate lag of regime " << i + 1 << " diverged at t = " << t << " (value " << b << ")";
        throw NumericalError(os.str());
      }
      st.b_tilde[t][i] = b;
    }
  };
  st.forward = regime_forward(model, x.size(), logf, hook);
  return st;
}

FitReport emlike_fit(const MrsModel& model0, const std::vector<double>& x, const EmConfig& config) {
  require_observations(x);
  require_valid(model0);
  check_config(config, model0.num_ar());
  const Guards g = resolve_guards(config, x);
  const std::size_t n = x.size();

  auto loglik = [&](const MrsModel& theta) { return emlike_forward(theta, x).forward.loglik; };
  auto update = [&](const MrsModel& theta) {
    EmLikeState es = emlike_forward(theta, x);
    KimResult kim = kim_backward(theta.P, es.forward);
    EmSufficientStats st = stats_from_kim(kim);
    MStepResult out;
    out.theta = theta;
    for (int i = 0; i < theta.num_regimes(); ++i) {
      const RegimeSpec& r = theta.regimes[i];
      RegimeSpec& nr = out.theta.regimes[i];
      if (r.is_ar()) {
        if (n < 2) throw DegenerateRegimeError(i, "AR1 update needs at least two observations");
        std::vector<double> w(st.regime[i].begin() + 1, st.regime[i].end());
        std::vector<double> y(x.begin() + 1, x.end());
        std::vector<double> lagged(n - 1);
        for (std::size_t t = 1; t < n; ++t) lagged[t - 1] = es.b_tilde[t - 1][i];
        Ar1Regression u = weighted_ar1_regression(w, y, lagged);
        nr.alpha = u.alpha;
        nr.phi = std::clamp(u.phi, -kPhiLimit, kPhiLimit);
        nr.sigma2 = std::max(u.sigma2, g.sigma2_floor);
        out.at_bound = out.at_bound || u.sigma2 < g.sigma2_floor || std::abs(u.phi) > kPhiLimit;
      } else {
        IidUpdate u = iid_update(r, st.regime[i], x, g.sigma2_floor);
        nr.mu = u.mu;
        nr.sigma2 = u.sigma2;
        out.at_bound = out.at_bound || u.floored;
      }
    }
    TransitionUpdate tu = m_step_transitions(st, theta.P, theta.pi, g.delta, config.estimate_pi);
    out.theta.P = tu.P;
    out.theta.pi = tu.pi;
    out.at_bound = out.at_bound || tu.at_bound;
    return out;
  };
  FitReport rep = run_loop(project_to_guards(model0, g), config, Layout::Independent, update, loglik);
  rep.algorithm = "emlike";
  rep.approximate = true;
  return rep;
}

}  // namespace mrs
