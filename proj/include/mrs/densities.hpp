#ifndef MRS_DENSITIES_HPP
#define MRS_DENSITIES_HPP

#include <vector>

#include "mrs/model.hpp"

namespace mrs {

double normal_log_density(double x, double mean, double var);

// m-step-ahead AR(1) density: mean alpha (1-phi^m)/(1-phi) + phi^m x_lag,
// variance sigma2 (1-phi^{2m})/(1-phi^2).
double ar1_mstep_log_density(double x_t, double x_lag, int m, double alpha, double phi, double sigma2);
double ar1_mstep_density(double x_t, double x_lag, int m, double alpha, double phi, double sigma2);

// AR1: Normal(alpha/(1-phi), sigma2/(1-phi^2)); i.i.d.: the regime's own density.
double stationary_log_density(double x, const RegimeSpec& regime);
double stationary_density(double x, const RegimeSpec& regime);

// Density of an i.i.d. regime; zero (log: -inf) outside the support.
double iid_log_density(double x, const RegimeSpec& regime);
double iid_density(double x, const RegimeSpec& regime);

double log_gamma(double x);

// Lag-indexed constants of one AR1 regime, for repeated density evaluation.
// Entry m (1-based) holds phi^m, (1-phi^m)/(1-phi) and (1-phi^{2m})/(1-phi^2),
// built by the one-step recursions so every lag costs O(1).
class Ar1Kernel {
 public:
  Ar1Kernel() = default;
  Ar1Kernel(const RegimeSpec& regime, int max_lag);

  int max_lag() const { return static_cast<int>(phim_.size()) - 1; }
  double log_density(double x_t, double x_lag, int m) const {
    double mean = alpha_ * a_[m] + phim_[m] * x_lag;
    double d = x_t - mean;
    return log_norm_[m] - d * d * inv2var_[m];
  }
  double stationary_log_density(double x) const {
    double d = x - stat_mean_;
    return stat_log_norm_ - d * d * stat_inv2var_;
  }

 private:
  double alpha_ = 0.0;
  std::vector<double> phim_, a_, log_norm_, inv2var_;
  double stat_mean_ = 0.0, stat_log_norm_ = 0.0, stat_inv2var_ = 0.0;
};

}  // namespace mrs

#endif  // MRS_DENSITIES_HPP
