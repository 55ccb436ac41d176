#ifndef MRS_EM_HPP
#define MRS_EM_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mrs/backward.hpp"
#include "mrs/model.hpp"
#include "mrs/state_space.hpp"

namespace mrs {

struct EmConfig {
  double tol = 1.5e-8;
  int max_iters = 1000;
  int restarts = 1;
  Truncation truncation_D;
  // Defaults to 1e-8 times the sample variance of x.
  std::optional<double> sigma2_floor;
  double delta = 1e-4;  // transition probabilities are kept in [delta, 1 - delta]
  // false: no sigma2 floor beyond a tiny positive value, delta = 0.
  bool guards = true;
  bool estimate_pi = true;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: one per hardware thread
};

std::vector<Violation> validate(const EmConfig& config, int num_ar);

// Resolved guard values for a data set.
struct Guards {
  double sigma2_floor = 0.0;
  double delta = 0.0;
};
Guards resolve_guards(const EmConfig& config, const std::vector<double>& x);

// Posterior weights consumed by the M-step.
struct EmSufficientStats {
  std::size_t T = 0;
  // regime[i][t] = P(R_t = i | x) for every regime.
  std::vector<std::vector<double>> regime;
  // lag[i][t][c] = P(R_t = i, N_{t,i} = c | x) for AR1 regime i; slot 0 is
  // the never-visited (or truncated) case.
  std::vector<std::vector<std::vector<double>>> lag;
  Matrix transitions;          // sum_t P(R_{t-1} = i, R_t = j | x)
  std::vector<double> origins;  // sum_{t=1..T} P(R_{t-1} = i | x)
  std::vector<double> initial;  // P(R_0 = i | x)
};

EmSufficientStats collect_stats(const SmoothedResult& smoothed);

struct TransitionUpdate {
  Matrix P;
  std::vector<double> pi;
  std::vector<int> degenerate;  // rows frozen for lack of posterior mass
  bool at_bound = false;
};

TransitionUpdate m_step_transitions(const EmSufficientStats& stats, const Matrix& P_old,
                                    const std::vector<double>& pi_old, double delta,
                                    bool estimate_pi = true);

struct IidUpdate {
  double mu = 0.0;
  double sigma2 = 0.0;
  bool floored = false;
};

IidUpdate m_step_normal(const std::vector<double>& w, const std::vector<double>& x, double sigma2_floor);
IidUpdate m_step_lognormal(const std::vector<double>& w, const std::vector<double>& x, double q,
                           int sign, double sigma2_floor);

// Shape mu and scale sigma2 = mean(sign (x - q)) / mu, with mu solving
// log mu - digamma(mu) = log mean(y) - mean(log y).
constexpr double kGammaShapeMax = 1e8;
IidUpdate m_step_gamma(const std::vector<double>& w, const std::vector<double>& x, double q, int sign);
double gamma_profile(double shape, const std::vector<double>& w, const std::vector<double>& x, double q,
                     int sign);

struct Ar1Update {
  double alpha = 0.0;
  double phi = 0.0;
  double sigma2 = 0.0;
  bool floored = false;
};

// Weights lag[t][c] as in EmSufficientStats. phi_start is always a candidate
// so the update never lowers the profile below its value there.
Ar1Update m_step_ar1(const std::vector<std::vector<double>>& lag, const std::vector<double>& x,
                     double sigma2_floor, std::optional<double> phi_start = std::nullopt);

// Expected complete-data log density of one AR1 regime at given parameters.
double ar1_expected_loglik(const std::vector<std::vector<double>>& lag, const std::vector<double>& x,
                           double alpha, double phi, double sigma2);
// Profile g(phi) with alpha and sigma2 at their conditional maximizers.
double ar1_profile(const std::vector<std::vector<double>>& lag, const std::vector<double>& x, double phi,
                   double sigma2_floor);

enum class Termination { LoglikIncreaseBelowTol, StepBelowTol, MaxIters, BoundaryGuard, NonFinite };
std::string_view to_string(Termination t);

struct RestartResult {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  MrsModel start;
  MrsModel theta;
  double loglik = 0.0;
  int iterations = 0;
  Termination termination = Termination::MaxIters;
  std::vector<double> trajectory;
};

struct FitReport {
  MrsModel theta_hat;
  double loglik = 0.0;
  std::vector<double> loglik_trajectory;
  int iterations = 0;
  Termination termination = Termination::MaxIters;
  std::vector<RestartResult> per_restart;
  int best_restart = 0;
  bool approximate = false;  // loglik is not the exact likelihood
  std::string algorithm = "em";
};

// One EM run from model0. Numerical failures are thrown.
FitReport em_fit(const MrsModel& model0, const std::vector<double>& x, const EmConfig& config);

// Clamps sigma2 to the floor and rows of P into [delta, 1 - delta].
MrsModel project_to_guards(const MrsModel& model, const Guards& guards);

// Single EM iteration's M-step from the smoothed posteriors.
struct MStepResult {
  MrsModel theta;
  bool at_bound = false;
};
MStepResult m_step(const MrsModel& theta, const SmoothedResult& smoothed, const std::vector<double>& x,
                   const Guards& guards, bool estimate_pi);

using StartSampler = std::function<MrsModel(std::mt19937_64& rng, const MrsModel& templ)>;

// Table-1 style draws: alpha, phi ~ U(-1, 1), sigma2 ~ U(0, 4), mu ~ U(0, 8),
// p_ii ~ U(0, 1) with the rest of the row split evenly. Shifts, signs and pi
// are copied from the template.
MrsModel sample_start(std::mt19937_64& rng, const MrsModel& templ);

struct MultistartOptions {
  bool first_from_template = true;  // restart 0 starts at the template itself
  StartSampler sampler = sample_start;
};

using FitFunction =
    std::function<FitReport(const MrsModel&, const std::vector<double>&, const EmConfig&)>;

// Runs config.restarts fits concurrently and keeps the highest loglik
// (ties within 1e-9 go to the lowest index). AR1 regimes in every
// terminating point are ordered by decreasing phi.
FitReport multistart(const std::vector<double>& x, const MrsModel& templ, const EmConfig& config,
                     const MultistartOptions& options = {}, const FitFunction& fit = em_fit);

// Reorders the AR1 block by decreasing phi, permuting P and pi to match.
MrsModel order_ar_by_phi(const MrsModel& model);

// Per-restart generator derived from (seed, restart).
std::mt19937_64 restart_rng(std::uint64_t seed, std::uint64_t restart);

double sample_variance(const std::vector<double>& x);

}  // namespace mrs

#endif  // MRS_EM_HPP
