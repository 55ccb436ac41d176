#ifndef MRS_MODEL_HPP
#define MRS_MODEL_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mrs {

// Dense row-major matrix of doubles. Only what the algorithms need.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class RegimeKind { AR1, IidNormal, IidShiftedGamma, IidShiftedLogNormal };

std::string_view to_string(RegimeKind kind);
RegimeKind regime_kind_from_string(std::string_view name);

// One regime of the switching model.
//
// AR1 uses alpha, phi, sigma2. IidNormal uses mu, sigma2. The shifted
// families use mu, sigma2 and the fixed shift q; with sign = +1 the density
// is evaluated at x - q (support x > q), with sign = -1 at q - x (support
// x < q). For IidShiftedGamma, mu is the shape and sigma2 the scale.
struct RegimeSpec {
  RegimeKind kind = RegimeKind::IidNormal;
  int sign = 1;
  double alpha = 0.0;
  double phi = 0.0;
  double mu = 0.0;
  double sigma2 = 1.0;
  double q = 0.0;

  bool is_ar() const { return kind == RegimeKind::AR1; }
  bool is_shifted() const {
    return kind == RegimeKind::IidShiftedGamma || kind == RegimeKind::IidShiftedLogNormal;
  }

  static RegimeSpec ar1(double alpha, double phi, double sigma2);
  static RegimeSpec normal(double mu, double sigma2);
  static RegimeSpec shifted_gamma(double shape, double scale, double q, int sign = 1);
  static RegimeSpec shifted_lognormal(double mu, double sigma2, double q, int sign = 1);

  bool operator==(const RegimeSpec&) const = default;
};

// Full parameter set: AR1 regimes first, then i.i.d. regimes.
struct MrsModel {
  std::vector<RegimeSpec> regimes;
  Matrix P;
  std::vector<double> pi;

  int num_regimes() const { return static_cast<int>(regimes.size()); }
  // Number of leading AR1 regimes.
  int num_ar() const;
  bool has_iid() const { return num_ar() < num_regimes(); }

  bool operator==(const MrsModel&) const = default;
};

struct Violation {
  std::string field;
  std::string message;
};

enum class Layout {
  Independent,  // 1..4 AR1 regimes, all ahead of the i.i.d. regimes
  Dependent     // any mix and order of regimes
};

// Checks every parameter invariant; never throws.
std::vector<Violation> validate(const MrsModel& model, Layout layout = Layout::Independent);

// Throws ValidationError listing all violations, if any.
void require_valid(const MrsModel& model, Layout layout = Layout::Independent);

enum class PiTreatment { Fixed, Estimated };

// Regime parameters (shifts excluded) plus M(M-1) transition parameters,
// plus M-1 initial-distribution parameters when pi is estimated.
int num_free_parameters(const MrsModel& model, PiTreatment pi = PiTreatment::Fixed);

// Sup-norm distance over every parameter, including P and pi.
double sup_distance(const MrsModel& a, const MrsModel& b);

// Flat parameter vector in a fixed order (regime fields, P, pi).
std::vector<double> flatten_parameters(const MrsModel& model);

// Relabels regimes: new regime r is old regime perm[r].
MrsModel permute_regimes(const MrsModel& model, const std::vector<int>& perm);

// ---- serialization -------------------------------------------------------

// `regime.<i>.<field> = value`, `P.<i>.<j> = value`, `pi.<i> = value`,
// 1-based indices, one entry per line, '#' comments.
std::string to_key_value(const MrsModel& model);
MrsModel model_from_key_value(std::string_view text);

std::string to_json(const MrsModel& model);
MrsModel model_from_json(std::string_view text);

// Dispatches on the extension: .json is JSON, everything else key-value.
MrsModel load_model(const std::string& path);
void save_model(const MrsModel& model, const std::string& path);

// Shortest decimal that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace mrs

#endif  // MRS_MODEL_HPP
