#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mrs/errors.hpp"
#include "mrs/pipeline.hpp"
#include "mrs/presets.hpp"
#include "mrs/simulator.hpp"

using namespace mrs;
using doctest::Approx;

namespace {

PriceSeries make_daily(const std::vector<double>& v, Day start = parse_day("2021-01-04")) {
  PriceSeries p;
  for (std::size_t t = 0; t < v.size(); ++t) p.days.push_back(start + std::chrono::days{static_cast<int>(t)});
  p.values = v;
  return p;
}

const std::array<double, 7> kPattern = {0.3, 0.5, 0.4, 0.2, 0.1, -0.6, -0.9};

}  // namespace

TEST_CASE("dates") {
  auto d = parse_day("2024-02-29T13:30");
  CHECK(format_day(d) == "2024-02-29");
  CHECK(weekday_index(parse_day("2021-01-04")) == 0);
  CHECK(weekday_index(parse_day("2021-01-10 00:00")) == 6);
  CHECK_THROWS_AS(parse_day("2023-02-29"), ValidationError);
  CHECK_THROWS_AS(parse_day("01/02/2023"), ValidationError);
}

TEST_CASE("daily averages") {
  IntradaySeries s;
  Day d0 = parse_day("2020-03-01");
  for (int i = 0; i < 48; ++i) s.days.push_back(d0), s.values.push_back(5.0);
  auto a = daily_average(s);
  CHECK(a.daily.values == std::vector<double>{5.0});
  CHECK(a.warnings.empty());

  IntradaySeries two;
  for (int i = 0; i < 48; ++i) two.days.push_back(d0), two.values.push_back(1.0);
  for (int i = 0; i < 48; ++i) two.days.push_back(d0 + std::chrono::days{1}), two.values.push_back(3.0);
  CHECK(daily_average(two).daily.values == std::vector<double>{1.0, 3.0});

  IntradaySeries three;
  std::vector<double> expect;
  for (int day = 0; day < 3; ++day) {
    double sum = 0.0;
    for (int i = 0; i < 48; ++i) {
      double v = day * 10.0 + std::sin(i * 0.3);
      three.days.push_back(d0 + std::chrono::days{day});
      three.values.push_back(v);
      sum += v;
    }
    expect.push_back(sum / 48.0);
  }
  auto r = daily_average(three).daily.values;
  for (int day = 0; day < 3; ++day) CHECK(r[day] == Approx(expect[day]).epsilon(1e-15));
}

TEST_CASE("daily averages flag gaps and sparse days") {
  Day d0 = parse_day("2020-03-01");
  IntradaySeries gap;
  gap.days = {d0, d0 + std::chrono::days{2}};
  gap.values = {1.0, 2.0};
  CHECK_THROWS_AS(daily_average(gap), ValidationError);
  IntradaySeries sparse;
  sparse.days = {d0, d0};
  sparse.values = {1.0, 2.0};
  CHECK(daily_average(sparse).warnings.size() == 1);
}

TEST_CASE("moving average") {
  std::vector<double> c(100, 3.0);
  for (double v : moving_average_trend(c, 64)) CHECK(v == Approx(3.0).epsilon(1e-15));
  std::vector<double> lin(200);
  std::iota(lin.begin(), lin.end(), 0.0);
  auto h = moving_average_trend(lin, 8);
  for (std::size_t t = 4; t < 196; ++t) CHECK(h[t] == Approx(lin[t]).epsilon(1e-13));
  CHECK_THROWS_AS(moving_average_trend(lin, 7), ValidationError);
}

TEST_CASE("pure weekly pattern is absorbed by the betas") {
  std::vector<double> v(140);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = 40.0 + kPattern[t % 7];
  auto r = rfp_detrend(make_daily(v));
  for (int d = 0; d < 7; ++d) CHECK(std::abs(r.trend.weekday_betas[d] - kPattern[d]) < 1e-9);
  for (double x : r.x) CHECK(std::abs(x) < 1e-9);
  CHECK(r.replaced.empty());
}

TEST_CASE("single spike in a flat series") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0.0, 0.1);
  std::vector<double> v(30);
  for (auto& a : v) a = 20.0 + z(rng);
  v[17] += 10.0;
  auto r = rfp_detrend(make_daily(v));
  CHECK(r.replaced == std::vector<std::size_t>{17});
  for (double h : r.trend.longterm) CHECK(std::abs(h - 20.0) < 0.15);
  std::size_t big = std::max_element(r.x.begin(), r.x.end()) - r.x.begin();
  CHECK(big == 17);
  CHECK(r.x[17] > 9.0);
  int large = 0;
  for (double x : r.x) large += std::abs(x) > 1.0;
  CHECK(large == 1);
}

TEST_CASE("shifting the calendar rotates the betas") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0.0, 0.2);
  std::vector<double> v(120);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = 30.0 + 0.02 * t + kPattern[t % 7] + z(rng);
  auto a = rfp_detrend(make_daily(v, parse_day("2021-01-04")));
  auto b = rfp_detrend(make_daily(v, parse_day("2021-01-05")));
  for (int d = 0; d < 7; ++d) CHECK(b.trend.weekday_betas[(d + 1) % 7] == Approx(a.trend.weekday_betas[d]).epsilon(1e-12));
  double s = 0.0;
  for (double beta : a.trend.weekday_betas) s += beta;
  CHECK(std::abs(s) < 1e-12);
}

TEST_CASE("prices decompose exactly") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> v(300);
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = 50.0 + 5.0 * std::sin(t / 40.0) + kPattern[t % 7] + z(rng);
  v[40] += 60.0, v[200] -= 40.0;
  RfpConfig cfg;
  cfg.iterate = true;
  auto r = rfp_detrend(make_daily(v), cfg);
  for (std::size_t t = 0; t < v.size(); ++t) CHECK(std::abs(r.x[t] + r.trend.g(t) + r.trend.longterm[t] - v[t]) < 1e-12);
  CHECK(std::find(r.replaced.begin(), r.replaced.end(), 40) != r.replaced.end());
  CHECK(std::find(r.replaced.begin(), r.replaced.end(), 200) != r.replaced.end());
  CHECK_THROWS_AS(rfp_detrend(make_daily(std::vector<double>(10, 1.0))), ValidationError);
}

TEST_CASE("classification uses a strict threshold") {
  std::vector<std::vector<double>> rm = {{0.49, 0.51}, {0.5, 0.5}, {0.9, 0.1}};
  CHECK(classify(rm, 1) == std::vector<int>{1, 0, 0});
  CHECK_THROWS_AS(classify(rm, 2), ValidationError);
}

TEST_CASE("BIC") {
  CHECK_THROWS_AS(bic(0.0, 1, 0), ValidationError);
  CHECK(bic(0.0, 1, 3) == Approx(std::log(3.0)));
  CHECK(bic(-100.0, 7, 1704) == Approx(252.08513595172482).epsilon(1e-12));
  CHECK(bic(-100.0, 8, 1704) - bic(-100.0, 7, 1704) == Approx(std::log(1704.0)));
}

TEST_CASE("type 7 quantiles") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  std::shuffle(v.begin(), v.end(), std::mt19937_64(1));
  CHECK(quantile_type7(v, 0.25) == Approx(25.75));
  CHECK(quantile_type7(v, 0.75) == Approx(75.25));
  CHECK(quantile_type7(v, 0.0) == 1.0);
  CHECK(quantile_type7(v, 1.0) == 100.0);
}

TEST_CASE("candidate names") {
  for (auto c : all_candidates()) CHECK(candidate_from_string(to_string(c)) == c);
  CHECK_THROWS_AS(candidate_from_string("M3-LN"), ValidationError);
}

TEST_CASE("candidate starts are valid models") {
  auto sim = simulate(presets::m1_ln(), 400, 2);
  for (auto c : all_candidates()) CHECK(validate(candidate_start(c, sim.x)).empty());
}

TEST_CASE("single candidate gives one report") {
  auto sim = simulate(presets::m1_ln(), 300, 5);
  EmConfig cfg;
  cfg.truncation_D = 20;
  auto r = fit_candidates(sim.x, {Candidate::M1LN}, cfg);
  REQUIRE(r.size() == 1);
  CHECK(r[0].ok);
  CHECK(r[0].n_params == 7);
  CHECK(r[0].bic == Approx(bic(r[0].fit.loglik, 7, sim.x.size())));
}

TEST_CASE("log-normal spikes are preferred over gamma spikes on log-normal data") {
  int wins = 0;
  EmConfig cfg;
  cfg.truncation_D = 40;
  cfg.threads = 1;
  for (int rep = 0; rep < 10; ++rep) {
    auto sim = simulate(presets::m1_ln(), 1700, 100 + rep);
    auto r = fit_candidates(sim.x, {Candidate::M1LN, Candidate::M1Gamma}, cfg);
    if (r[0].ok && r[0].candidate == Candidate::M1LN) ++wins;
  }
  CHECK(wins >= 6);
}
