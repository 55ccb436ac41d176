#include "mrs/backward.hpp"

#include <string>

#include "mrs/errors.hpp"

namespace mrs {

namespace {

// gamma/prediction at step t, zero where gamma is zero.
std::vector<double> smoothing_ratio(const ForwardStep& step, const std::vector<double>& gamma,
                                    std::size_t t) {
  std::vector<double> ratio(gamma.size(), 0.0);
  for (std::size_t q = 0; q < gamma.size(); ++q) {
    if (gamma[q] == 0.0) continue;
    if (step.prediction[q] == 0.0)
      throw InconsistencyError("smoothed mass on a state with zero prediction at t=" + std::to_string(t));
    ratio[q] = gamma[q] / step.prediction[q];
  }
  return ratio;
}

void check_shapes(const MrsModel& model, const ForwardResult& fwd) {
  if (model.num_regimes() != fwd.M || model.num_ar() != fwd.k)
    throw ValidationError("model does not match the forward result");
}

}  // namespace

double SmoothedResult::counter_marginal(std::size_t t, int i, int m) const {
  const auto& v = counter.at(t).at(i);
  int far = far_rendered(t, D);
  int L = static_cast<int>(v.size()) - 1;
  if (m >= 1 && m <= L) return v[m];
  if (m == far) return v[0];
  return 0.0;
}

namespace {

void accumulate_marginals(const ForwardStep& st, const std::vector<double>& g, int M, int k, std::size_t t,
                          Truncation D, std::vector<double>& rm, std::vector<std::vector<double>>& cm) {
  rm.assign(M, 0.0);
  cm.assign(k, std::vector<double>(static_cast<std::size_t>(max_lag(t, D)) + 1, 0.0));
  for (std::size_t s = 0; s < st.layer.size(); ++s) {
    const CounterVector& n = st.layer[s];
    for (int j = 0; j < M; ++j) {
      double v = g[s * M + j];
      rm[j] += v;
      if (j < k) cm[j][n.is_far(j) ? 0 : n[j]] += v;
    }
  }
}

// Pairwise probabilities into step t, given gamma at t and its ratio to the
// prediction at t.
void accumulate_pairwise(const MrsModel& model, const ForwardStep& prev, const ForwardStep& cur,
                         const std::vector<double>& g, const std::vector<double>& ratio, int M, int k,
                         Matrix& pw) {
  // AR1 origin: R_{t-1} = i exactly when N_{t,i} = 1.
  for (std::size_t s = 0; s < cur.layer.size(); ++s) {
    const CounterVector& n = cur.layer[s];
    for (int i = 0; i < k; ++i) {
      if (n[i] != 1) continue;
      for (int j = 0; j < M; ++j) pw(i, j) += g[s * M + j];
    }
  }
  if (k == M) return;

  // i.i.d. origin: split gamma at the common successor state by the
  // share each origin contributed to its prediction.
  for (std::size_t s = 0; s < prev.layer.size(); ++s) {
    for (int i = k; i < M; ++i) {
      double f = prev.filtered[s * M + i];
      if (f == 0.0) continue;
      const double* r = &ratio[static_cast<std::size_t>(cur.successor[s * M + i]) * M];
      for (int j = 0; j < M; ++j) pw(i, j) += f * model.P(i, j) * r[j];
    }
  }
}

// One sweep from T down to 0. Marginals and (optionally) pairwise terms are
// accumulated while the layers are still in cache.
SmoothedResult backward_pass(const MrsModel& model, const ForwardResult& fwd, bool with_pairwise) {
  check_shapes(model, fwd);
  const int M = fwd.M;
  const int k = fwd.k;
  const std::size_t T = fwd.T();

  SmoothedResult out;
  out.M = M;
  out.k = k;
  out.D = fwd.D;
  out.gamma.resize(T + 1);
  out.regime_marginal.resize(T + 1);
  out.counter.resize(T + 1);
  if (with_pairwise) out.pairwise.assign(T + 1, Matrix(M, M, 0.0));
  out.gamma[T] = fwd.steps[T].filtered;

  for (std::size_t t = T; t-- > 0;) {
    const ForwardStep& cur = fwd.steps[t];
    const ForwardStep& nxt = fwd.steps[t + 1];
    const std::vector<double>& gn = out.gamma[t + 1];
    std::vector<double> ratio = smoothing_ratio(nxt, gn, t + 1);
    accumulate_marginals(nxt, gn, M, k, t + 1, fwd.D, out.regime_marginal[t + 1], out.counter[t + 1]);
    if (with_pairwise) accumulate_pairwise(model, cur, nxt, gn, ratio, M, k, out.pairwise[t + 1]);

    std::vector<double>& g = out.gamma[t];
    g.assign(cur.filtered.size(), 0.0);
    const std::size_t S = cur.layer.size();
    for (std::size_t s = 0; s < S; ++s) {
      for (int i = 0; i < M; ++i) {
        double f = cur.filtered[s * M + i];
        if (f == 0.0) continue;
        const double* r = &ratio[static_cast<std::size_t>(nxt.successor[s * M + i]) * M];
        double acc = 0.0;
        for (int j = 0; j < M; ++j) acc += model.P(i, j) * r[j];
        g[s * M + i] = f * acc;
      }
    }
  }
  accumulate_marginals(fwd.steps[0], out.gamma[0], M, k, 0, fwd.D, out.regime_marginal[0], out.counter[0]);
  return out;
}

}  // namespace

SmoothedResult backward_smooth(const MrsModel& model, const ForwardResult& fwd) {
  return backward_pass(model, fwd, false);
}

std::vector<Matrix> pairwise_smoothed(const MrsModel& model, const ForwardResult& fwd,
                                      const SmoothedResult& smoothed) {
  check_shapes(model, fwd);
  const int M = fwd.M;
  const std::size_t T = fwd.T();
  std::vector<Matrix> out(T + 1, Matrix(M, M, 0.0));
  for (std::size_t t = 1; t <= T; ++t) {
    const auto& g = smoothed.gamma[t];
    std::vector<double> ratio =
        fwd.k == M ? std::vector<double>() : smoothing_ratio(fwd.steps[t], g, t);
    accumulate_pairwise(model, fwd.steps[t - 1], fwd.steps[t], g, ratio, M, fwd.k, out[t]);
  }
  return out;
}

SmoothedResult smooth(const MrsModel& model, const ForwardResult& fwd) {
  return backward_pass(model, fwd, true);
}

}  // namespace mrs
