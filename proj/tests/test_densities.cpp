#include <doctest.h>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <random>

#include "mrs/densities.hpp"
#include "mrs/model.hpp"

using namespace mrs;
using doctest::Approx;

namespace {
constexpr double kInvSqrt2Pi = 0.398942280401432677940;
}

TEST_CASE("normal density") {
  CHECK(std::exp(normal_log_density(0.0, 0.0, 1.0)) == Approx(kInvSqrt2Pi).epsilon(1e-15));
  boost::math::normal_distribution<double> n(1.5, std::sqrt(2.5));
  CHECK(std::exp(normal_log_density(-0.3, 1.5, 2.5)) == Approx(boost::math::pdf(n, -0.3)).epsilon(1e-14));
}

TEST_CASE("one-step AR1 density") {
  double v = ar1_mstep_density(1.2, 0.4, 1, 0.3, 0.6, 0.8);
  CHECK(v == Approx(std::exp(normal_log_density(1.2, 0.3 + 0.6 * 0.4, 0.8))).epsilon(1e-14));
}

TEST_CASE("phi = 0 ignores the lag") {
  for (int m : {1, 2, 7})
    CHECK(ar1_mstep_density(0.7, 100.0, m, 0.5, 0.0, 1.3) ==
          Approx(std::exp(normal_log_density(0.7, 0.5, 1.3))).epsilon(1e-14));
}

TEST_CASE("two-step AR1 density composes one-step transitions") {
  // mean phi^2 x_lag = 0.5, variance 1 + phi^2 = 1.25
  for (double x : {-1.0, 0.5, 2.0})
    CHECK(ar1_mstep_density(x, 2.0, 2, 0.0, 0.5, 1.0) ==
          Approx(std::exp(normal_log_density(x, 0.5, 1.25))).epsilon(1e-14));
}

TEST_CASE("m-step density against numerical integration of one-step transitions") {
  // integrate f1(x | y) f_{m-1}(y | x_lag) dy on a fine grid
  const double a = 0.4, phi = -0.7, s2 = 0.9, lag = 1.3, x = -0.2;
  for (int m = 2; m <= 5; ++m) {
    double sum = 0.0, h = 1e-3;
    for (double y = -15.0; y <= 15.0; y += h)
      sum += ar1_mstep_density(x, y, 1, a, phi, s2) * ar1_mstep_density(y, lag, m - 1, a, phi, s2) * h;
    CHECK(ar1_mstep_density(x, lag, m, a, phi, s2) == Approx(sum).epsilon(1e-8));
  }
}

TEST_CASE("Ar1Kernel agrees with the closed form") {
  auto r = RegimeSpec::ar1(-0.3, 0.85, 1.7);
  Ar1Kernel kern(r, 60);
  CHECK(kern.max_lag() == 60);
  for (int m = 1; m <= 60; m += 7)
    CHECK(kern.log_density(0.9, -1.1, m) ==
          Approx(std::log(ar1_mstep_density(0.9, -1.1, m, -0.3, 0.85, 1.7))).epsilon(1e-12));
  CHECK(kern.stationary_log_density(0.4) == Approx(stationary_log_density(0.4, r)).epsilon(1e-14));
}

TEST_CASE("stationary density of an AR1 regime") {
  auto r = RegimeSpec::ar1(0.0, 0.75, 1.0);
  double var = 1.0 / (1.0 - 0.5625);
  CHECK(var == Approx(2.2857142857142857));
  CHECK(stationary_density(0.8, r) == Approx(std::exp(normal_log_density(0.8, 0.0, var))).epsilon(1e-14));

  // long simulation variance
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  double x = 0.0, s = 0.0, s2 = 0.0;
  const int n = 400000;
  for (int t = 0; t < n; ++t) {
    x = 0.75 * x + z(rng);
    s += x;
    s2 += x * x;
  }
  double sv = s2 / n - (s / n) * (s / n);
  CHECK(std::abs(sv - var) < 0.05);
}

TEST_CASE("stationary density of i.i.d. regimes") {
  CHECK(stationary_density(2.0, RegimeSpec::normal(2.0, 1.0)) == Approx(kInvSqrt2Pi).epsilon(1e-15));
  CHECK(stationary_density(7.0, RegimeSpec::shifted_lognormal(3.751, 1.268, 7.106)) == 0.0);
}

TEST_CASE("i.i.d. densities") {
  CHECK(iid_density(0.0, RegimeSpec::normal(0.0, 1.0)) == Approx(kInvSqrt2Pi).epsilon(1e-15));
  CHECK(iid_density(2.0, RegimeSpec::shifted_gamma(1.0, 2.0, 0.0)) == Approx(0.5 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(iid_density(1.0, RegimeSpec::shifted_lognormal(0.0, 1.0, 0.0)) == Approx(kInvSqrt2Pi).epsilon(1e-15));
  CHECK(iid_log_density(-1.0, RegimeSpec::shifted_gamma(2.0, 1.0, 0.0)) == -INFINITY);
  CHECK(iid_density(0.0, RegimeSpec::shifted_lognormal(0.0, 1.0, 0.0)) == 0.0);
}

TEST_CASE("shifted densities against boost") {
  boost::math::gamma_distribution<double> g(2.7, 1.9);
  boost::math::lognormal_distribution<double> ln(0.6, std::sqrt(0.45));
  for (double y : {0.05, 0.9, 3.0, 11.0}) {
    CHECK(iid_density(5.0 + y, RegimeSpec::shifted_gamma(2.7, 1.9, 5.0, 1)) ==
          Approx(boost::math::pdf(g, y)).epsilon(1e-13));
    CHECK(iid_density(5.0 - y, RegimeSpec::shifted_gamma(2.7, 1.9, 5.0, -1)) ==
          Approx(boost::math::pdf(g, y)).epsilon(1e-13));
    CHECK(iid_density(-2.0 + y, RegimeSpec::shifted_lognormal(0.6, 0.45, -2.0, 1)) ==
          Approx(boost::math::pdf(ln, y)).epsilon(1e-13));
    CHECK(iid_density(-2.0 - y, RegimeSpec::shifted_lognormal(0.6, 0.45, -2.0, -1)) ==
          Approx(boost::math::pdf(ln, y)).epsilon(1e-13));
  }
  CHECK(iid_density(5.5, RegimeSpec::shifted_gamma(2.0, 1.0, 5.0, -1)) == 0.0);
}

TEST_CASE("log_gamma against high precision references") {
  const std::pair<double, double> ref[] = {
      {0.001, 6.9071788853838536825}, {0.5, 0.57236494292470008707}, {1.0, 0.0},
      {1.5, -0.12078223763524522235}, {2.0, 0.0},                     {3.7, 1.4280723266653879219},
      {10.0, 12.801827480081469611},  {25.25, 55.585686044869429708}, {100.0, 359.13420536957539878},
      {1000.5, 5908.6741758486774887}};
  for (auto [x, v] : ref) CHECK(log_gamma(x) == Approx(v).epsilon(1e-14).scale(1.0));
}
