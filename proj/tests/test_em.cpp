#include <doctest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>

#include "mrs/backward.hpp"
#include "mrs/baselines.hpp"
#include "mrs/em.hpp"
#include "mrs/errors.hpp"
#include "mrs/forward.hpp"
#include "mrs/presets.hpp"
#include "mrs/simulator.hpp"

using namespace mrs;
using doctest::Approx;

namespace {

std::vector<double> uniform_weights(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n);
  for (auto& v : w) v = u(rng);
  return w;
}

// Lag weights that put w[t] on the one-step term for t >= 1.
std::vector<std::vector<double>> one_step_lags(const std::vector<double>& w) {
  std::vector<std::vector<double>> lag(w.size());
  lag[0] = {0.0};
  for (std::size_t t = 1; t < w.size(); ++t) lag[t] = {0.0, w[t]};
  return lag;
}

EmSufficientStats stats_from_path(const std::vector<int>& path, int M) {
  EmSufficientStats s;
  s.T = path.size() - 1;
  s.transitions = Matrix(M, M, 0.0);
  s.origins.assign(M, 0.0);
  s.initial.assign(M, 0.0);
  s.initial[path[0]] = 1.0;
  for (std::size_t t = 1; t < path.size(); ++t) {
    s.transitions(path[t - 1], path[t]) += 1.0;
    s.origins[path[t - 1]] += 1.0;
  }
  return s;
}

double gamma_loglik(const std::vector<double>& y, double shape, double scale) {
  double s = 0.0;
  for (double v : y) s += (shape - 1.0) * std::log(v) - v / scale - boost::math::lgamma(shape) - shape * std::log(scale);
  return s;
}

template <class F>
double golden_max(F f, double a, double b) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  for (int i = 0; i < 200; ++i) {
    if (f(c) > f(d)) b = d;
    else a = c;
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("normal M-step, unit weights") {
  std::vector<double> x = {1.0, 2.0, 4.0, 7.0};
  auto u = m_step_normal(std::vector<double>(4, 1.0), x, 1e-12);
  CHECK(u.mu == Approx(3.5));
  CHECK(u.sigma2 == Approx((6.25 + 2.25 + 0.25 + 12.25) / 4.0));
  CHECK_FALSE(u.floored);
}

TEST_CASE("normal M-step, subset weights") {
  std::vector<double> x = {1.0, 100.0, 3.0, -50.0};
  auto u = m_step_normal({1.0, 0.0, 1.0, 0.0}, x, 1e-12);
  CHECK(u.mu == Approx(2.0));
  CHECK(u.sigma2 == Approx(1.0));
}

TEST_CASE("normal M-step, random weights") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(1.0, 2.0);
  std::vector<double> x(50);
  for (auto& v : x) v = z(rng);
  auto w = uniform_weights(rng, x.size());
  double W = 0, s = 0, ss = 0;
  for (std::size_t t = 0; t < x.size(); ++t) W += w[t], s += w[t] * x[t];
  double mu = s / W;
  for (std::size_t t = 0; t < x.size(); ++t) ss += w[t] * (x[t] - mu) * (x[t] - mu);
  auto u = m_step_normal(w, x, 1e-12);
  CHECK(std::abs(u.mu - mu) < 1e-12);
  CHECK(std::abs(u.sigma2 - ss / W) < 1e-12);
}

TEST_CASE("log-normal M-step") {
  std::vector<double> x = {1.5, 2.0, 5.0, 9.0};
  auto u = m_step_lognormal(std::vector<double>(4, 1.0), x, 0.0, 1, 1e-12);
  double m = 0, v = 0;
  for (double a : x) m += std::log(a) / 4.0;
  for (double a : x) v += (std::log(a) - m) * (std::log(a) - m) / 4.0;
  CHECK(u.mu == Approx(m).epsilon(1e-14));
  CHECK(u.sigma2 == Approx(v).epsilon(1e-14));

  auto one = m_step_lognormal({0.0, 0.0, 1.0, 0.0}, x, 1.0, 1, 1e-6);
  CHECK(one.mu == Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(one.sigma2 == 1e-6);
  CHECK(one.floored);

  // negative sign mirrors the data about q
  auto neg = m_step_lognormal(std::vector<double>(4, 1.0), {-1.5, -2.0, -5.0, -9.0}, 0.0, -1, 1e-12);
  CHECK(neg.mu == Approx(m).epsilon(1e-14));
}

TEST_CASE("log-normal M-step, random weights") {
  std::mt19937_64 rng(9);
  std::lognormal_distribution<double> ln(0.3, 0.8);
  std::vector<double> x(60);
  for (auto& v : x) v = 2.0 + ln(rng);
  auto w = uniform_weights(rng, x.size());
  double W = 0, s = 0, ss = 0;
  for (std::size_t t = 0; t < x.size(); ++t) W += w[t], s += w[t] * std::log(x[t] - 2.0);
  for (std::size_t t = 0; t < x.size(); ++t) ss += w[t] * std::pow(std::log(x[t] - 2.0) - s / W, 2);
  auto u = m_step_lognormal(w, x, 2.0, 1, 1e-12);
  CHECK(std::abs(u.mu - s / W) < 1e-12);
  CHECK(std::abs(u.sigma2 - ss / W) < 1e-12);
}

TEST_CASE("gamma M-step recovers the shape and matches a direct MLE") {
  std::mt19937_64 rng(12);
  std::gamma_distribution<double> g(2.0, 3.0);
  std::vector<double> x(10000);
  for (auto& v : x) v = g(rng);
  std::vector<double> w(x.size(), 1.0);
  auto u = m_step_gamma(w, x, 0.0, 1);
  CHECK(std::abs(u.mu - 2.0) < 0.1);

  // coordinate ascent on the two-parameter likelihood
  double shape = 1.0, scale = 1.0;
  for (int sweep = 0; sweep < 60; ++sweep) {
    shape = golden_max([&](double a) { return gamma_loglik(x, a, scale); }, 0.05, 20.0);
    scale = golden_max([&](double b) { return gamma_loglik(x, shape, b); }, 0.05, 20.0);
  }
  CHECK(u.mu == Approx(shape).epsilon(1e-4));
  CHECK(u.sigma2 == Approx(scale).epsilon(1e-4));
  CHECK(gamma_loglik(x, u.mu, u.sigma2) >= gamma_loglik(x, shape, scale) - 1e-6);
}

TEST_CASE("gamma M-step is a local maximum of the profile") {
  std::mt19937_64 rng(13);
  std::gamma_distribution<double> g(0.7, 2.0);
  std::vector<double> x(300);
  for (auto& v : x) v = -4.0 - g(rng);
  auto w = uniform_weights(rng, x.size());
  auto u = m_step_gamma(w, x, -4.0, -1);
  double at = gamma_profile(u.mu, w, x, -4.0, -1);
  CHECK(at >= gamma_profile(u.mu * (1 + 1e-3), w, x, -4.0, -1));
  CHECK(at >= gamma_profile(u.mu * (1 - 1e-3), w, x, -4.0, -1));
}

TEST_CASE("gamma M-step on a point mass hits the shape guard") {
  CHECK_THROWS_AS(m_step_gamma({0.0, 1.0, 0.0}, {1.0, 2.0, 3.0}, 0.0, 1), NumericalError);
  CHECK_THROWS_AS(m_step_gamma({1.0, 1.0}, {2.0, 2.0}, 0.0, 1), NumericalError);
}

TEST_CASE("AR1 M-step with one-step weights is weighted least squares") {
  std::mt19937_64 rng(21);
  auto sim = simulate(presets::model1(), 200, 3);
  auto w = uniform_weights(rng, sim.x.size());
  auto u = m_step_ar1(one_step_lags(w), sim.x, 1e-12);
  std::vector<double> ww(w.begin() + 1, w.end()), y(sim.x.begin() + 1, sim.x.end()),
      lagged(sim.x.begin(), sim.x.end() - 1);
  auto r = weighted_ar1_regression(ww, y, lagged);
  CHECK(std::abs(u.phi - r.phi) < 1e-9);
  CHECK(std::abs(u.alpha - r.alpha) < 1e-9);
  CHECK(std::abs(u.sigma2 - r.sigma2) < 1e-9);
}

TEST_CASE("AR1 M-step on white noise gives phi near 0") {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> x(2000);
  for (auto& v : x) v = z(rng);
  auto u = m_step_ar1(one_step_lags(std::vector<double>(x.size(), 1.0)), x, 1e-12);
  CHECK(std::abs(u.phi) < 3.0 / std::sqrt(2000.0));
}

TEST_CASE("AR1 M-step maximizes the expected log density with multi-lag weights") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uu(0.0, 1.0);
  auto sim = simulate(presets::model1(), 80, 8);
  const auto& x = sim.x;
  std::vector<std::vector<double>> lag(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    lag[t].assign(std::min<std::size_t>(t, 6) + 1, 0.0);
    for (auto& v : lag[t]) v = uu(rng) < 0.5 ? uu(rng) : 0.0;
  }
  auto u = m_step_ar1(lag, x, 1e-12);
  double q = ar1_expected_loglik(lag, x, u.alpha, u.phi, u.sigma2);
  for (int d = 0; d < 3; ++d)
    for (double e : {-1e-4, 1e-4}) {
      double a = u.alpha + (d == 0) * e, p = u.phi + (d == 1) * e, s = u.sigma2 + (d == 2) * e;
      CHECK(q >= ar1_expected_loglik(lag, x, a, p, s));
    }
  // no better point on a coarse grid
  for (double p = -0.95; p < 0.96; p += 0.05)
    for (double a = -1.0; a <= 1.0; a += 0.1)
      for (double s = 0.2; s <= 3.0; s += 0.2) CHECK(q >= ar1_expected_loglik(lag, x, a, p, s));
  CHECK(ar1_profile(lag, x, u.phi, 1e-12) == Approx(q).epsilon(1e-10));
}

TEST_CASE("AR1 M-step never lowers the profile below the old phi") {
  auto sim = simulate(presets::model2(), 60, 2);
  auto lag = one_step_lags(std::vector<double>(sim.x.size(), 1.0));
  for (double p0 : {-0.99, 0.0, 0.5, 0.999}) {
    auto u = m_step_ar1(lag, sim.x, 1e-12, p0);
    CHECK(ar1_profile(lag, sim.x, u.phi, 1e-12) >= ar1_profile(lag, sim.x, p0, 1e-12) - 1e-12);
  }
}

TEST_CASE("transition M-step on a known path counts transitions") {
  std::vector<int> path = {0, 0, 1, 1, 1, 0, 0, 0, 1, 0};
  auto s = stats_from_path(path, 2);
  auto u = m_step_transitions(s, Matrix(2, 2, 0.5), {0.5, 0.5}, 1e-12);
  // from 0: 0->0 x3, 0->1 x2; from 1: 1->1 x2, 1->0 x2
  CHECK(u.P(0, 0) == Approx(0.6));
  CHECK(u.P(0, 1) == Approx(0.4));
  CHECK(u.P(1, 0) == Approx(0.5));
  CHECK(u.pi[0] == Approx(1.0));
}

TEST_CASE("transition M-step with uniform posteriors") {
  EmSufficientStats s;
  s.T = 10;
  s.transitions = Matrix(2, 2, 2.5);
  s.origins = {5.0, 5.0};
  s.initial = {0.5, 0.5};
  auto u = m_step_transitions(s, Matrix(2, 2, 0.5), {0.3, 0.7}, 1e-4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(u.P(i, j) == Approx(0.5));
  CHECK(u.pi[0] == Approx(0.5));
  auto fixed = m_step_transitions(s, Matrix(2, 2, 0.5), {0.3, 0.7}, 1e-4, false);
  CHECK(fixed.pi[0] == 0.3);
}

TEST_CASE("transition M-step keeps rows inside the guard band") {
  std::vector<int> path = {0, 0, 0, 0, 0, 1, 1, 1, 1, 0, 0};
  auto s = stats_from_path(path, 3);
  auto u = m_step_transitions(s, Matrix(3, 3, 1.0 / 3.0), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.01);
  for (int i = 0; i < 2; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 3; ++j) {
      CHECK(u.P(i, j) >= 0.01 - 1e-15);
      CHECK(u.P(i, j) <= 0.99 + 1e-15);
      sum += u.P(i, j);
    }
    CHECK(sum == Approx(1.0).epsilon(1e-12));
  }
  CHECK(u.at_bound);
  // regime 3 never occurs, its row is frozen
  REQUIRE(u.degenerate.size() == 1);
  CHECK(u.degenerate[0] == 2);
  CHECK(u.P(2, 0) == Approx(1.0 / 3.0));
}

TEST_CASE("one EM step from the truth keeps P near the truth and raises the likelihood") {
  auto m = presets::model1();
  auto sim = simulate(m, 400, 77);
  EmConfig cfg;
  cfg.max_iters = 1;
  auto rep = em_fit(m, sim.x, cfg);
  REQUIRE(rep.loglik_trajectory.size() == 2);
  CHECK(rep.loglik_trajectory[1] >= rep.loglik_trajectory[0] - 1e-9);
  CHECK(std::abs(rep.theta_hat.P(0, 0) - 0.9) < 0.06);
  CHECK(std::abs(rep.theta_hat.P(1, 1) - 0.9) < 0.06);
  CHECK(rep.termination == Termination::MaxIters);
}

TEST_CASE("EM is monotone and converges") {
  auto m = presets::model1();
  auto sim = simulate(m, 300, 5);
  for (Truncation D : {Truncation{}, Truncation{20}}) {
    EmConfig cfg;
    cfg.truncation_D = D;
    auto rep = em_fit(m, sim.x, cfg);
    for (std::size_t i = 1; i < rep.loglik_trajectory.size(); ++i)
      CHECK(rep.loglik_trajectory[i] >= rep.loglik_trajectory[i - 1] - 1e-9);
    CHECK(rep.termination != Termination::MaxIters);
    CHECK(rep.loglik > rep.loglik_trajectory.front());
  }
}

TEST_CASE("restarting at a converged point stops within two iterations") {
  auto m = presets::model1();
  auto sim = simulate(m, 200, 6);
  EmConfig cfg;
  cfg.tol = 1e-10;
  cfg.max_iters = 5000;
  auto first = em_fit(m, sim.x, cfg);
  cfg.tol = 1.5e-8;
  auto again = em_fit(first.theta_hat, sim.x, cfg);
  CHECK(again.iterations <= 2);
  CHECK(again.termination != Termination::MaxIters);
  CHECK(std::abs(again.loglik - first.loglik) < 1e-8);
}

TEST_CASE("relabelled start gives the relabelled fit") {
  auto m = presets::model2();
  auto sim = simulate(m, 150, 14);
  EmConfig cfg;
  cfg.truncation_D = 30;
  auto a = em_fit(m, sim.x, cfg);
  auto b = em_fit(permute_regimes(m, {1, 0}), sim.x, cfg);
  CHECK(std::abs(a.loglik - b.loglik) < 1e-9);
  CHECK(sup_distance(order_ar_by_phi(a.theta_hat), order_ar_by_phi(b.theta_hat)) < 1e-6);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("fits with i.i.d. shifted regimes") {
  auto m = presets::m1_ln();
  auto sim = simulate(m, 500, 3);
  EmConfig cfg;
  cfg.truncation_D = 40;
  auto rep = em_fit(m, sim.x, cfg);
  for (std::size_t i = 1; i < rep.loglik_trajectory.size(); ++i)
    CHECK(rep.loglik_trajectory[i] >= rep.loglik_trajectory[i - 1] - 1e-9);
  auto g = m;
  g.regimes[1] = RegimeSpec::shifted_gamma(2.0, 20.0, 7.106);
  auto rg = em_fit(g, sim.x, cfg);
  for (std::size_t i = 1; i < rg.loglik_trajectory.size(); ++i)
    CHECK(rg.loglik_trajectory[i] >= rg.loglik_trajectory[i - 1] - 1e-9);
}

TEST_CASE("multistart is deterministic and restarts = 1 equals em_fit") {
  auto m = presets::model1();
  auto sim = simulate(m, 150, 8);
  EmConfig cfg;
  cfg.truncation_D = 30;
  auto single = em_fit(m, sim.x, cfg);
  auto ms1 = multistart(sim.x, m, cfg);
  CHECK(ms1.loglik == single.loglik);
  CHECK(ms1.theta_hat == order_ar_by_phi(single.theta_hat));

  cfg.restarts = 4;
  cfg.seed = 99;
  cfg.threads = 2;
  auto a = multistart(sim.x, m, cfg);
  cfg.threads = 1;
  auto b = multistart(sim.x, m, cfg);
  REQUIRE(a.per_restart.size() == 4);
  CHECK(a.theta_hat == b.theta_hat);
  CHECK(a.best_restart == b.best_restart);
  for (int r = 0; r < 4; ++r) {
    CHECK(a.per_restart[r].loglik == b.per_restart[r].loglik);
    CHECK(a.per_restart[r].start == b.per_restart[r].start);
    CHECK(a.loglik >= a.per_restart[r].loglik);
  }
}

TEST_CASE("sample_start draws from the stated ranges") {
  auto templ = presets::m1_ln();
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    auto s = sample_start(rng, templ);
    CHECK(validate(s).empty());
    CHECK(std::abs(s.regimes[0].alpha) <= 1.0);
    CHECK(s.regimes[0].sigma2 <= 4.0);
    CHECK(s.regimes[1].mu >= 0.0);
    CHECK(s.regimes[1].mu <= 8.0);
    CHECK(s.regimes[1].q == templ.regimes[1].q);
    CHECK(s.pi == templ.pi);
  }
  auto r1 = restart_rng(5, 1), r1b = restart_rng(5, 1), r2 = restart_rng(5, 2);
  auto v = r1();
  CHECK(v == r1b());
  CHECK(v != r2());
}

TEST_CASE("guards") {
  std::vector<double> x = {0.0, 2.0, 4.0};
  EmConfig cfg;
  auto g = resolve_guards(cfg, x);
  CHECK(g.sigma2_floor == Approx(1e-8 * 8.0 / 3.0));
  CHECK(g.delta == 1e-4);
  cfg.guards = false;
  CHECK(resolve_guards(cfg, x).delta == 0.0);

  auto m = presets::model1();
  m.P(0, 0) = 1.0, m.P(0, 1) = 0.0;
  m.regimes[1].sigma2 = 1e-20;
  auto p = project_to_guards(m, {1e-6, 1e-3});
  CHECK(p.regimes[1].sigma2 == 1e-6);
  CHECK(p.P(0, 0) == Approx(1.0 - 1e-3));
  CHECK(p.P(0, 1) == Approx(1e-3));
}

TEST_CASE("configuration validation") {
  EmConfig cfg;
  CHECK(validate(cfg, 1).empty());
  cfg.restarts = 0;
  cfg.truncation_D = 2;
  CHECK(validate(cfg, 2).size() == 2);
  auto m = presets::model1();
  CHECK_THROWS_AS(em_fit(m, {0.0, 1.0, 2.0}, cfg), ValidationError);
}
