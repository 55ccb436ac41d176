#ifndef MRS_BASELINES_HPP
#define MRS_BASELINES_HPP

#include <vector>

#include "mrs/em.hpp"
#include "mrs/model.hpp"

namespace mrs {

// Same parameters as MrsModel, but an AR1 regime active at t regresses on
// x_{t-1} whichever regime produced it. At t = 0 AR1 regimes use their
// stationary law. Regimes may appear in any order.
struct DependentMrsModel {
  MrsModel params;
};

double dependent_log_density(const DependentMrsModel& model, const std::vector<double>& x, std::size_t t,
                             int regime);

struct HamiltonResult {
  double loglik = 0.0;
  std::vector<std::vector<double>> filtered;    // P(R_t = i | x_{0:t})
  std::vector<std::vector<double>> prediction;  // P(R_t = i | x_{0:t-1}); row 0 is pi
};

struct KimResult {
  std::vector<std::vector<double>> smoothed;  // P(R_t = i | x)
  std::vector<Matrix> pairwise;               // (i, j) = P(R_{t-1} = i, R_t = j | x); [0] is zero
};

HamiltonResult hamilton_forward(const DependentMrsModel& model, const std::vector<double>& x);
KimResult kim_backward(const Matrix& P, const HamiltonResult& forward);

// Weighted least squares of x_t on (1, x_{t-1}) over t = 1..T, residual
// variance divided by the total weight.
struct Ar1Regression {
  double alpha = 0.0;
  double phi = 0.0;
  double sigma2 = 0.0;
};
Ar1Regression weighted_ar1_regression(const std::vector<double>& w, const std::vector<double>& y,
                                      const std::vector<double>& lagged);

FitReport dependent_em(const DependentMrsModel& model0, const std::vector<double>& x, const EmConfig& config);
FitReport dependent_em(const MrsModel& model0, const std::vector<double>& x, const EmConfig& config);

// b_tilde[t][i] for AR1 regime i (indices of the AR1 block), with the
// embedded forward probabilities it was built from.
struct EmLikeState {
  std::vector<std::vector<double>> b_tilde;
  HamiltonResult forward;
};

constexpr double kEmLikeDivergence = 1e12;

// Embedded forward pass with every AR1 lag replaced by b_tilde; b_tilde[0] = x_0.
EmLikeState emlike_forward(const MrsModel& model, const std::vector<double>& x);

// Approximate objective: the report's loglik and trajectory are flagged approximate.
FitReport emlike_fit(const MrsModel& model0, const std::vector<double>& x, const EmConfig& config);

}  // namespace mrs

#endif  // MRS_BASELINES_HPP
