#include "mrs/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "mrs/baselines.hpp"
#include "mrs/densities.hpp"
#include "mrs/errors.hpp"
#include "mrs/forward.hpp"

namespace mrs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_normal_pdf(double x, double mean, double var) {
  double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * d * d / var;
}

// m-step AR(1) density by composing m one-step transitions.
double composed_ar1(double x, double x_lag, int m, const RegimeSpec& r) {
  double mean = x_lag;
  double var = 0.0;
  for (int s = 0; s < m; ++s) {
    mean = r.alpha + r.phi * mean;
    var = r.phi * r.phi * var + r.sigma2;
  }
  return log_normal_pdf(x, mean, var);
}

double stationary_ar1(double x, const RegimeSpec& r) {
  return log_normal_pdf(x, r.alpha / (1.0 - r.phi), r.sigma2 / (1.0 - r.phi * r.phi));
}

double log_or_neg_inf(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

void check_size(int M, std::size_t n) {
  double paths = std::pow(static_cast<double>(M), static_cast<double>(n));
  if (paths > kOraclePathLimit)
    throw ValidationError("oracle: M^(T+1) = " + format_double(paths) + " exceeds the enumeration limit");
}

// Walks every path in odometer order; `log_weight` scores a path.
template <class Score, class Visit>
void for_each_path(int M, std::size_t n, Score&& log_weight, Visit&& visit) {
  std::vector<int> r(n, 0);
  while (true) {
    visit(r, log_weight(r));
    std::size_t pos = n;
    while (pos > 0) {
      --pos;
      if (++r[pos] < M) break;
      r[pos] = 0;
      if (pos == 0) return;
    }
  }
}

OracleResult enumerate(int M, std::size_t n, const std::function<double(const std::vector<int>&)>& lw,
                       const std::function<std::vector<int>(const std::vector<int>&, std::size_t)>& counters) {
  double mx = kNegInf;
  for_each_path(M, n, lw, [&](const std::vector<int>&, double w) { mx = std::max(mx, w); });

  OracleResult out;
  out.regime_posterior.assign(n, std::vector<double>(M, 0.0));
  out.pairwise.assign(n, Matrix(M, M, 0.0));
  if (counters) out.augmented.resize(n);
  if (!(mx > kNegInf)) {
    out.likelihood = 0.0;
    out.log_likelihood = kNegInf;
    return out;
  }
  double total = 0.0;
  for_each_path(M, n, lw, [&](const std::vector<int>& r, double w) {
    double e = std::exp(w - mx);
    if (e == 0.0) return;
    total += e;
    for (std::size_t t = 0; t < n; ++t) {
      out.regime_posterior[t][r[t]] += e;
      if (t > 0) out.pairwise[t](r[t - 1], r[t]) += e;
      if (counters) {
        auto& slot = out.augmented[t][counters(r, t)];
        if (slot.empty()) slot.assign(M, 0.0);
        slot[r[t]] += e;
      }
    }
  });
  for (std::size_t t = 0; t < n; ++t) {
    for (auto& v : out.regime_posterior[t]) v /= total;
    for (auto& v : out.pairwise[t].data()) v /= total;
    if (counters)
      for (auto& [key, v] : out.augmented[t])
        for (auto& p : v) p /= total;
  }
  out.log_likelihood = mx + std::log(total);
  out.likelihood = std::exp(out.log_likelihood);
  return out;
}

}  // namespace

OracleResult brute_likelihood(const MrsModel& model, const std::vector<double>& x, Truncation D,
                              bool augmented) {
  require_valid(model);
  require_observations(x);
  const int M = model.num_regimes();
  const int k = model.num_ar();
  const std::size_t n = x.size();
  check_size(M, n);

  auto lw = [&](const std::vector<int>& r) {
    double w = log_or_neg_inf(model.pi[r[0]]);
    std::vector<long> last(M, -1);
    for (std::size_t t = 0; t < n && w > kNegInf; ++t) {
      if (t > 0) w += log_or_neg_inf(model.P(r[t - 1], r[t]));
      const RegimeSpec& reg = model.regimes[r[t]];
      if (reg.is_ar()) {
        long tau = last[r[t]];
        long m = tau < 0 ? -1 : static_cast<long>(t) - tau;
        if (m < 0 || (D && m >= *D))
          w += stationary_ar1(x[t], reg);
        else
          w += composed_ar1(x[t], x[tau], static_cast<int>(m), reg);
      } else {
        w += iid_log_density(x[t], reg);
      }
      last[r[t]] = static_cast<long>(t);
    }
    return w;
  };

  std::function<std::vector<int>(const std::vector<int>&, std::size_t)> counters;
  if (augmented) {
    counters = [&](const std::vector<int>& r, std::size_t t) {
      std::vector<int> c(k);
      int far = static_cast<int>(t) + 1;
      if (D) far = std::min(far, *D);
      for (int i = 0; i < k; ++i) {
        int v = far;
        for (std::size_t s = t; s-- > 0;) {
          if (r[s] == i) {
            v = static_cast<int>(t - s);
            break;
          }
        }
        if (D && v >= *D) v = far;
        c[i] = v;
      }
      return c;
    };
  }
  return enumerate(M, n, lw, counters);
}

OracleResult brute_dependent(const DependentMrsModel& model, const std::vector<double>& x) {
  const MrsModel& p = model.params;
  require_valid(p, Layout::Dependent);
  require_observations(x);
  const int M = p.num_regimes();
  const std::size_t n = x.size();
  check_size(M, n);
  auto lw = [&](const std::vector<int>& r) {
    double w = log_or_neg_inf(p.pi[r[0]]);
    for (std::size_t t = 0; t < n && w > kNegInf; ++t) {
      if (t > 0) w += log_or_neg_inf(p.P(r[t - 1], r[t]));
      const RegimeSpec& reg = p.regimes[r[t]];
      if (reg.is_ar())
        w += t == 0 ? stationary_ar1(x[t], reg) : log_normal_pdf(x[t], reg.alpha + reg.phi * x[t - 1], reg.sigma2);
      else
        w += iid_log_density(x[t], reg);
    }
    return w;
  };
  return enumerate(M, n, lw, nullptr);
}

}  // namespace mrs
