#ifndef MRS_BACKWARD_HPP
#define MRS_BACKWARD_HPP

#include <vector>

#include "mrs/forward.hpp"
#include "mrs/model.hpp"

namespace mrs {

struct SmoothedResult {
  int M = 0;
  int k = 0;
  Truncation D;
  // gamma[t] is aligned with the forward layer at t: (state, regime) row-major.
  std::vector<std::vector<double>> gamma;
  std::vector<std::vector<double>> regime_marginal;
  // counter[t][i][c] = P(R_t = i, N_{t,i} = c | x) for AR1 regime i; slot 0
  // holds the far value, slot c >= 1 the lag c.
  std::vector<std::vector<std::vector<double>>> counter;
  // pairwise[t](i, j) = P(R_{t-1} = i, R_t = j | x); pairwise[0] is all zero.
  std::vector<Matrix> pairwise;

  std::size_t T() const { return gamma.size() - 1; }
  // m is the rendered counter value (t+1 or D meaning far).
  double counter_marginal(std::size_t t, int i, int m) const;
};

// Gamma, regime marginals and counter marginals. Leaves `pairwise` empty.
SmoothedResult backward_smooth(const MrsModel& model, const ForwardResult& fwd);

// P(R_{t-1} = i, R_t = j | x) for t = 1..T (index 0 is all zero).
std::vector<Matrix> pairwise_smoothed(const MrsModel& model, const ForwardResult& fwd,
                                      const SmoothedResult& smoothed);

// backward_smooth followed by pairwise_smoothed.
SmoothedResult smooth(const MrsModel& model, const ForwardResult& fwd);

}  // namespace mrs

#endif  // MRS_BACKWARD_HPP
