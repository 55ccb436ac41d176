#ifndef MRS_FORWARD_HPP
#define MRS_FORWARD_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "mrs/errors.hpp"
#include "mrs/model.hpp"
#include "mrs/state_space.hpp"

namespace mrs {

// One time step of the normalized forward pass. Probability arrays are
// row-major over (state index in `layer`, regime).
struct ForwardStep {
  StateLayer layer;
  std::vector<double> filtered;
  std::vector<double> prediction;
  // For t >= 1: index in `layer` of the successor of (state s of the
  // previous layer, regime i), stored at s * M + i.
  std::vector<std::uint32_t> successor;
  double log_normalizer = 0.0;
};

class ForwardResult {
 public:
  int M = 0;
  int k = 0;
  bool has_iid = false;
  Truncation D;
  std::vector<ForwardStep> steps;
  double loglik = 0.0;

  std::size_t T() const { return steps.size() - 1; }
  double filtered(std::size_t t, const CounterVector& n, int regime) const;
  double prediction(std::size_t t, const CounterVector& n, int regime) const;
  std::vector<double> regime_filtered(std::size_t t) const;
  std::vector<double> regime_prediction(std::size_t t) const;
  std::size_t peak_state_count() const;
};

// Thrown by forward_normalized when every state has zero density at some t.
// The partial result holds steps 0..t-1.
class ForwardZeroLikelihoodError : public ZeroLikelihoodError {
 public:
  ForwardZeroLikelihoodError(std::size_t t, std::shared_ptr<const ForwardResult> partial);
  const ForwardResult& partial() const { return *partial_; }

 private:
  std::shared_ptr<const ForwardResult> partial_;
};

ForwardResult forward_normalized(const MrsModel& model, const std::vector<double>& x,
                                 Truncation D = std::nullopt);

// Linear-scale recursion, pulling from predecessors over the full S^(t).
// Meant for short series; throws UnderflowError when the likelihood hits 0.
struct SimpleForwardResult {
  double likelihood = 0.0;
  std::vector<std::vector<CounterVector>> states;  // S^(t) per t
  std::vector<std::vector<double>> alpha;          // (state, regime) per t
};

SimpleForwardResult forward_simple(const MrsModel& model, const std::vector<double>& x);

// Conditional log density of x_t given H_t = (n, j) under the exact or
// truncated scheme.
double conditional_log_density(const MrsModel& model, const std::vector<double>& x, std::size_t t,
                               const CounterVector& n, int j);

void require_observations(const std::vector<double>& x);

}  // namespace mrs

#endif  // MRS_FORWARD_HPP
