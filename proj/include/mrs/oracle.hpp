#ifndef MRS_ORACLE_HPP
#define MRS_ORACLE_HPP

#include <map>
#include <vector>

#include "mrs/model.hpp"
#include "mrs/state_space.hpp"

namespace mrs {

struct DependentMrsModel;

// Exhaustive enumeration of all M^{T+1} regime paths.
struct OracleResult {
  double log_likelihood = 0.0;
  double likelihood = 0.0;
  std::vector<std::vector<double>> regime_posterior;  // [t][i]
  std::vector<Matrix> pairwise;                        // [t](i, j), t >= 1
  // [t][rendered counters][regime]; filled only when requested.
  std::vector<std::map<std::vector<int>, std::vector<double>>> augmented;
};

constexpr double kOraclePathLimit = 1e7;

// Each AR1 density conditions on that regime's own most recent occupancy
// (stationary when none, or when the lag is >= D under truncation).
OracleResult brute_likelihood(const MrsModel& model, const std::vector<double>& x,
                              Truncation D = std::nullopt, bool augmented = false);

// AR1 densities condition on x_{t-1}, whatever regime produced it.
OracleResult brute_dependent(const DependentMrsModel& model, const std::vector<double>& x);

}  // namespace mrs

#endif  // MRS_ORACLE_HPP
