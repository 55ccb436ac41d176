#include "mrs/densities.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mrs/errors.hpp"

namespace mrs {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);
}  // namespace

double normal_log_density(double x, double mean, double var) {
  double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - 0.5 * d * d / var;
}

double ar1_mstep_log_density(double x_t, double x_lag, int m, double alpha, double phi,
                             double sigma2) {
  if (m < 1) throw ValidationError("ar1 density: m must be >= 1");
  double phim = std::pow(phi, m);
  double a = phi == 1.0 ? m : (1.0 - phim) / (1.0 - phi);
  double v = (1.0 - phim * phim) / (1.0 - phi * phi);
  return normal_log_density(x_t, alpha * a + phim * x_lag, sigma2 * v);
}

double ar1_mstep_density(double x_t, double x_lag, int m, double alpha, double phi, double sigma2) {
  return std::exp(ar1_mstep_log_density(x_t, x_lag, m, alpha, phi, sigma2));
}

double log_gamma(double x) { return std::lgamma(x); }

double iid_log_density(double x, const RegimeSpec& r) {
  switch (r.kind) {
    case RegimeKind::IidNormal:
      return normal_log_density(x, r.mu, r.sigma2);
    case RegimeKind::IidShiftedGamma: {
      double y = r.sign * (x - r.q);
      if (!(y > 0.0)) return kNegInf;
      return (r.mu - 1.0) * std::log(y) - y / r.sigma2 - log_gamma(r.mu) - r.mu * std::log(r.sigma2);
    }
    case RegimeKind::IidShiftedLogNormal: {
      double y = r.sign * (x - r.q);
      if (!(y > 0.0)) return kNegInf;
      double ly = std::log(y);
      return normal_log_density(ly, r.mu, r.sigma2) - ly;
    }
    case RegimeKind::AR1:
      break;
  }
  throw ValidationError("iid_log_density called on an AR1 regime");
}

double iid_density(double x, const RegimeSpec& r) { return std::exp(iid_log_density(x, r)); }

double stationary_log_density(double x, const RegimeSpec& r) {
  if (r.is_ar())
    return normal_log_density(x, r.alpha / (1.0 - r.phi), r.sigma2 / (1.0 - r.phi * r.phi));
  return iid_log_density(x, r);
}

double stationary_density(double x, const RegimeSpec& r) {
  return std::exp(stationary_log_density(x, r));
}

Ar1Kernel::Ar1Kernel(const RegimeSpec& r, int max_lag) : alpha_(r.alpha) {
  const double phi = r.phi;
  const std::size_t n = static_cast<std::size_t>(std::max(max_lag, 0)) + 1;
  phim_.assign(n, 1.0);
  a_.assign(n, 0.0);
  log_norm_.assign(n, 0.0);
  inv2var_.assign(n, 0.0);
  double v = 0.0;
  for (std::size_t m = 1; m < n; ++m) {
    phim_[m] = phim_[m - 1] * phi;
    a_[m] = 1.0 + phi * a_[m - 1];
    v = 1.0 + phi * phi * v;
    double var = r.sigma2 * v;
    log_norm_[m] = -0.5 * (kLog2Pi + std::log(var));
    inv2var_[m] = 0.5 / var;
  }
  double svar = r.sigma2 / (1.0 - phi * phi);
  stat_mean_ = r.alpha / (1.0 - phi);
  stat_log_norm_ = -0.5 * (kLog2Pi + std::log(svar));
  stat_inv2var_ = 0.5 / svar;
}

}  // namespace mrs
