#ifndef MRS_SIMULATOR_HPP
#define MRS_SIMULATOR_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "mrs/baselines.hpp"
#include "mrs/model.hpp"

namespace mrs {

struct SimResult {
  std::vector<double> x;
  std::vector<int> r;                         // 0-based regime per t
  std::vector<std::vector<double>> latents;   // [AR1 regime][t]
  std::uint64_t seed = 0;
};

// Every AR1 latent evolves at each t from a stationary draw at t = 0;
// x_t is the component picked by r_t. The chain and each regime draw from
// their own substream of `seed`.
SimResult simulate(const MrsModel& model, std::size_t T, std::uint64_t seed);

// AR1 regimes regress on the previous observation whatever its regime.
SimResult simulate_dependent(const DependentMrsModel& model, std::size_t T, std::uint64_t seed);

// Generator for component `component` of master seed `seed`.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t component);

// One draw from an i.i.d. regime.
double draw_iid(const RegimeSpec& regime, std::mt19937_64& rng);

}  // namespace mrs

#endif  // MRS_SIMULATOR_HPP
