#include <doctest.h>

#include <cmath>

#include "mrs/baselines.hpp"
#include "mrs/densities.hpp"
#include "mrs/errors.hpp"
#include "mrs/forward.hpp"
#include "mrs/oracle.hpp"
#include "mrs/presets.hpp"
#include "mrs/simulator.hpp"

using namespace mrs;
using doctest::Approx;

TEST_CASE("single regime is a product of AR1 densities") {
  MrsModel m;
  m.regimes = {RegimeSpec::ar1(0.1, 0.5, 0.7)};
  m.P = Matrix(1, 1, 1.0);
  m.pi = {1.0};
  std::vector<double> x = {0.3, -0.4, 1.2};
  double ll = stationary_log_density(x[0], m.regimes[0]);
  for (std::size_t t = 1; t < x.size(); ++t) ll += normal_log_density(x[t], 0.1 + 0.5 * x[t - 1], 0.7);
  CHECK(brute_likelihood(m, x).log_likelihood == Approx(ll).epsilon(1e-14));
  CHECK(brute_dependent({m}, x).log_likelihood == Approx(ll).epsilon(1e-14));
}

TEST_CASE("T = 0 mixes stationary initial densities") {
  auto m = presets::model1();
  double v = m.pi[0] * stationary_density(0.9, m.regimes[0]) + m.pi[1] * stationary_density(0.9, m.regimes[1]);
  CHECK(brute_likelihood(m, {0.9}).likelihood == Approx(v).epsilon(1e-15));
  CHECK(brute_dependent({m}, {0.9}).likelihood == Approx(v).epsilon(1e-15));
}

TEST_CASE("oracle and forward_simple agree on Model 1, T = 6") {
  auto m = presets::model1();
  auto sim = simulate(m, 6, 101);
  double a = brute_likelihood(m, sim.x).likelihood;
  double b = forward_simple(m, sim.x).likelihood;
  CHECK(std::abs(a - b) <= 1e-12 * std::abs(b));
}

TEST_CASE("dependent oracle agrees with the Hamilton filter") {
  auto m = presets::example1();
  auto sim = simulate_dependent(m, 7, 4);
  CHECK(brute_dependent(m, sim.x).log_likelihood == Approx(hamilton_forward(m, sim.x).loglik).epsilon(1e-12));
}

TEST_CASE("posteriors sum to one") {
  auto m = presets::model2();
  auto sim = simulate(m, 8, 6);
  auto o = brute_likelihood(m, sim.x);
  for (const auto& row : o.regime_posterior) CHECK(row[0] + row[1] == Approx(1.0).epsilon(1e-13));
}

TEST_CASE("enumeration limit") {
  auto m = presets::model1();
  CHECK_THROWS_AS(brute_likelihood(m, std::vector<double>(30, 0.0)), ValidationError);
}
