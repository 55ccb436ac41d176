#ifndef MRS_PIPELINE_HPP
#define MRS_PIPELINE_HPP

#include <array>
#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "mrs/backward.hpp"
#include "mrs/em.hpp"
#include "mrs/model.hpp"

namespace mrs {

using Day = std::chrono::sys_days;

// Half-hourly (or any intraday) prices; only the calendar date of each
// stamp matters for averaging.
struct IntradaySeries {
  std::vector<Day> days;
  std::vector<double> values;
};

struct PriceSeries {
  std::vector<Day> days;
  std::vector<double> values;
};

// "YYYY-MM-DD" optionally followed by 'T' or ' ' and a time of day.
Day parse_day(std::string_view stamp);
std::string format_day(Day d);
// 0 = Monday .. 6 = Sunday.
int weekday_index(Day d);

IntradaySeries read_prices(const std::string& path);  // columns timestamp,price
PriceSeries read_daily(const std::string& path);      // columns date,price

struct DailyAverage {
  PriceSeries daily;
  std::vector<std::string> warnings;
};

// Mean of each calendar day's observations. Stamps must be nondecreasing
// and every day between the first and last must be present. Days with fewer
// than warn_below observations produce a warning.
DailyAverage daily_average(const IntradaySeries& prices, int warn_below = 40);

using LongTermSmoother = std::function<std::vector<double>(const std::vector<double>&)>;

// Centered 2xW moving average (weights 1/(2W) at both ends, 1/W inside);
// the window is truncated and renormalized near the ends of the series.
std::vector<double> moving_average_trend(const std::vector<double>& y, int window = 64);

struct TrendModel {
  std::array<double, 7> weekday_betas{};  // Monday first, summing to 0
  std::vector<double> longterm;           // h_t
  std::vector<int> weekday;               // weekday index per day
  std::string method;

  double g(std::size_t t) const { return weekday_betas[weekday[t]]; }
};

// Backfits h = smoother(y - g) and g = weekday means of y - h.
TrendModel fit_trend(const std::vector<double>& y, const std::vector<int>& weekday,
                     const LongTermSmoother& smoother, const std::string& method);

struct RfpConfig {
  int window = 64;
  double threshold_sd = 3.0;
  bool iterate = false;  // repeat replacement until nothing new is replaced
  int max_passes = 50;
  LongTermSmoother smoother;  // defaults to moving_average_trend(window)
  std::string method = "moving-average";
};

struct DetrendResult {
  TrendModel trend;
  std::vector<double> x;                // original prices minus g and h
  std::vector<std::size_t> replaced;    // indices replaced before the final fit
  std::vector<std::string> warnings;
};

DetrendResult rfp_detrend(const PriceSeries& daily, const RfpConfig& config = {});

// Label 1 (spike) where P(R_t = regime | x) > threshold, else 0.
std::vector<int> classify(const std::vector<std::vector<double>>& regime_marginal, int regime,
                          double threshold = 0.5);
std::vector<int> classify(const SmoothedResult& smoothed, int regime = 1, double threshold = 0.5);

double bic(double loglik, int n_params, std::size_t n_obs);

// Linear interpolation between order statistics at (n-1)p.
double quantile_type7(std::vector<double> values, double p);

enum class Candidate { M1LN, M1Gamma, M2LN, M2Gamma };
std::string_view to_string(Candidate c);
Candidate candidate_from_string(std::string_view name);
std::vector<Candidate> all_candidates();

// Starting model for a candidate: shifts at the quartiles of x and moment
// based starting values for every regime.
MrsModel candidate_start(Candidate c, const std::vector<double>& x);

struct CandidateReport {
  Candidate candidate = Candidate::M1LN;
  bool ok = false;
  std::string error;
  FitReport fit;
  int n_params = 0;
  double bic = 0.0;
};

// Fits every candidate with multistart(config) and sorts successes by BIC,
// failures last.
std::vector<CandidateReport> fit_candidates(const std::vector<double>& x, const std::vector<Candidate>& candidates,
                                            const EmConfig& config);

}  // namespace mrs

#endif  // MRS_PIPELINE_HPP
