#include "mrs/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mrs/densities.hpp"

namespace mrs {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void require_observations(const std::vector<double>& x) {
  if (x.empty()) throw ValidationError("observation sequence is empty");
  for (std::size_t t = 0; t < x.size(); ++t)
    if (!std::isfinite(x[t])) throw ValidationError("observation " + std::to_string(t) + " is not finite");
}

double ForwardResult::filtered(std::size_t t, const CounterVector& n, int regime) const {
  const auto& s = steps.at(t);
  auto i = s.layer.find(n);
  return i == StateLayer::npos ? 0.0 : s.filtered[i * M + regime];
}

double ForwardResult::prediction(std::size_t t, const CounterVector& n, int regime) const {
  const auto& s = steps.at(t);
  auto i = s.layer.find(n);
  return i == StateLayer::npos ? 0.0 : s.prediction[i * M + regime];
}

namespace {
std::vector<double> marginal(const std::vector<double>& p, int M) {
  std::vector<double> out(M, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) out[i % M] += p[i];
  return out;
}
}  // namespace

std::vector<double> ForwardResult::regime_filtered(std::size_t t) const {
  return marginal(steps.at(t).filtered, M);
}

std::vector<double> ForwardResult::regime_prediction(std::size_t t) const {
  return marginal(steps.at(t).prediction, M);
}

std::size_t ForwardResult::peak_state_count() const {
  std::size_t peak = 0;
  for (const auto& s : steps) peak = std::max(peak, s.layer.size());
  return peak;
}

ForwardZeroLikelihoodError::ForwardZeroLikelihoodError(std::size_t t,
                                                       std::shared_ptr<const ForwardResult> partial)
    : ZeroLikelihoodError(t, "zero likelihood at t=" + std::to_string(t) +
                                 ": every reachable state gives x_t zero density"),
      partial_(std::move(partial)) {}

double conditional_log_density(const MrsModel& model, const std::vector<double>& x, std::size_t t,
                               const CounterVector& n, int j) {
  const auto& r = model.regimes[j];
  if (!r.is_ar()) return iid_log_density(x[t], r);
  if (n.is_far(j)) return stationary_log_density(x[t], r);
  int m = n[j];
  return ar1_mstep_log_density(x[t], x[t - m], m, r.alpha, r.phi, r.sigma2);
}

ForwardResult forward_normalized(const MrsModel& model, const std::vector<double>& x, Truncation D) {
  require_valid(model);
  require_observations(x);
  const int M = model.num_regimes();
  const int k = model.num_ar();
  if (D && *D <= k) throw ValidationError("truncation D must exceed the number of AR1 regimes");
  const std::size_t T = x.size() - 1;

  ForwardResult res;
  res.M = M;
  res.k = k;
  res.has_iid = model.has_iid();
  res.D = D;
  res.steps.reserve(T + 1);

  std::vector<Ar1Kernel> kernels;
  for (int j = 0; j < k; ++j) kernels.emplace_back(model.regimes[j], max_lag(T, D));

  // Per-regime density tables for the current t. For AR1 regime j, slot 0 is
  // the far (stationary) value and slot c the lag-c value.
  std::vector<std::vector<double>> ar_tab(k);
  std::vector<double> iid_tab(M, 0.0);
  auto code = [](std::uint16_t c) -> std::size_t { return c == CounterVector::kFar ? 0 : c; };

  double loglik = 0.0;
  for (std::size_t t = 0; t <= T; ++t) {
    ForwardStep step;
    step.layer = StateLayer(reachable_counters(t, k, res.has_iid, D), t, D);
    const std::size_t S = step.layer.size();
    step.prediction.assign(S * M, 0.0);

    if (t == 0) {
      for (int j = 0; j < M; ++j) step.prediction[j] = model.pi[j];
    } else {
      const ForwardStep& prev = res.steps.back();
      const std::size_t Sp = prev.layer.size();
      step.successor.resize(Sp * M);
      for (std::size_t s = 0; s < Sp; ++s) {
        std::size_t iid_idx = StateLayer::npos;
        for (int i = 0; i < M; ++i) {
          std::size_t idx;
          if (i >= k && iid_idx != StateLayer::npos) {
            idx = iid_idx;
          } else {
            idx = step.layer.find(advance(prev.layer[s], i, t - 1, D));
            if (idx == StateLayer::npos) throw InconsistencyError("successor missing from layer");
            if (i >= k) iid_idx = idx;
          }
          step.successor[s * M + i] = static_cast<std::uint32_t>(idx);
          double f = prev.filtered[s * M + i];
          if (f == 0.0) continue;
          double* row = &step.prediction[idx * M];
          for (int j = 0; j < M; ++j) row[j] += f * model.P(i, j);
        }
      }
    }

    const int L = max_lag(t, D);
    for (int j = 0; j < k; ++j) {
      auto& tab = ar_tab[j];
      tab.resize(static_cast<std::size_t>(L) + 1);
      tab[0] = kernels[j].stationary_log_density(x[t]);
      for (int c = 1; c <= L; ++c) tab[c] = kernels[j].log_density(x[t], x[t - c], c);
    }
    for (int j = k; j < M; ++j) iid_tab[j] = iid_log_density(x[t], model.regimes[j]);

    double mx = kNegInf;
    for (std::size_t s = 0; s < S; ++s) {
      const CounterVector& n = step.layer[s];
      for (int j = 0; j < M; ++j) {
        if (step.prediction[s * M + j] <= 0.0) continue;
        double lf = j < k ? ar_tab[j][code(n[j])] : iid_tab[j];
        mx = std::max(mx, lf);
      }
    }
    if (!(mx > kNegInf) || !std::isfinite(mx)) {
      res.loglik = loglik;
      throw ForwardZeroLikelihoodError(t, std::make_shared<ForwardResult>(std::move(res)));
    }
    for (int j = 0; j < k; ++j)
      for (auto& v : ar_tab[j]) v = std::exp(v - mx);
    for (int j = k; j < M; ++j) iid_tab[j] = std::exp(iid_tab[j] - mx);

    step.filtered.resize(S * M);
    double total = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      const CounterVector& n = step.layer[s];
      for (int j = 0; j < M; ++j) {
        double w = step.prediction[s * M + j] * (j < k ? ar_tab[j][code(n[j])] : iid_tab[j]);
        step.filtered[s * M + j] = w;
        total += w;
      }
    }
    const double inv = 1.0 / total;
    for (auto& w : step.filtered) w *= inv;
    step.log_normalizer = mx + std::log(total);
    loglik += step.log_normalizer;
    res.steps.push_back(std::move(step));
  }
  res.loglik = loglik;
  return res;
}

SimpleForwardResult forward_simple(const MrsModel& model, const std::vector<double>& x) {
  require_valid(model);
  require_observations(x);
  const int M = model.num_regimes();
  const int k = model.num_ar();
  const std::size_t T = x.size() - 1;

  SimpleForwardResult res;
  StateLayer prev_layer;
  for (std::size_t t = 0; t <= T; ++t) {
    auto states = enumerate_counters(t, k);
    StateLayer layer(states, t, std::nullopt);
    std::vector<double> alpha(states.size() * M, 0.0);
    double total = 0.0;
    for (std::size_t s = 0; s < states.size(); ++s) {
      const CounterVector& n = states[s];
      for (int j = 0; j < M; ++j) {
        double prior = 0.0;
        if (t == 0) {
          prior = model.pi[j];
        } else {
          const auto& prev_alpha = res.alpha.back();
          Predecessors pre = predecessors(n, t, M);
          for (const auto& p : pre.counters) {
            std::size_t pi = prev_layer.find(p);
            if (pi == StateLayer::npos) continue;
            for (int i : pre.regimes) prior += model.P(i, j) * prev_alpha[pi * M + i];
          }
        }
        if (prior == 0.0) continue;
        double a = std::exp(conditional_log_density(model, x, t, n, j)) * prior;
        alpha[s * M + j] = a;
        total += a;
      }
    }
    if (total == 0.0)
      throw UnderflowError("forward_simple: joint density is exactly zero at t=" + std::to_string(t) +
                           "; use forward_normalized");
    res.states.push_back(std::move(states));
    res.alpha.push_back(std::move(alpha));
    prev_layer = std::move(layer);
    if (t == T) res.likelihood = total;
  }
  return res;
}

}  // namespace mrs
