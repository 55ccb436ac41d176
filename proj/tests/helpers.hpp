#ifndef MRS_TESTS_HELPERS_HPP
#define MRS_TESTS_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mrs/model.hpp"

namespace testing {

// Random valid model with k AR1 regimes among M. Shifted regimes get shifts
// far from typical data so every observation stays inside the support.
inline mrs::MrsModel random_model(std::mt19937_64& rng, int M, int k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  mrs::MrsModel m;
  for (int i = 0; i < k; ++i)
    m.regimes.push_back(mrs::RegimeSpec::ar1(2.0 * u(rng) - 1.0, 1.8 * u(rng) - 0.9, 0.3 + 1.5 * u(rng)));
  for (int i = k; i < M; ++i) {
    int kind = static_cast<int>(u(rng) * 3.0);
    if (kind == 0) m.regimes.push_back(mrs::RegimeSpec::normal(4.0 * u(rng) - 2.0, 0.3 + 2.0 * u(rng)));
    else if (kind == 1) m.regimes.push_back(mrs::RegimeSpec::shifted_gamma(0.5 + 3.0 * u(rng), 0.5 + u(rng), -30.0, 1));
    else m.regimes.push_back(mrs::RegimeSpec::shifted_lognormal(1.0 + u(rng), 0.1 + 0.3 * u(rng), 30.0, -1));
  }
  m.P = mrs::Matrix(M, M);
  for (int i = 0; i < M; ++i) {
    double s = 0.0;
    for (int j = 0; j < M; ++j) s += (m.P(i, j) = 0.05 + u(rng));
    for (int j = 0; j < M; ++j) m.P(i, j) /= s;
  }
  double s = 0.0;
  m.pi.resize(M);
  for (int j = 0; j < M; ++j) s += (m.pi[j] = 0.05 + u(rng));
  for (double& p : m.pi) p /= s;
  return m;
}

inline std::vector<double> random_series(std::mt19937_64& rng, std::size_t n, double scale = 1.5) {
  std::normal_distribution<double> z(0.0, scale);
  std::vector<double> x(n);
  for (auto& v : x) v = z(rng);
  return x;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return a.size() == b.size() ? d : INFINITY;
}

}  // namespace testing

#endif
