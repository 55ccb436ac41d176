#ifndef MRS_STATE_SPACE_HPP
#define MRS_STATE_SPACE_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

namespace mrs {

constexpr int kMaxArRegimes = 4;

// Counter cap D, or nullopt for the exact scheme.
using Truncation = std::optional<int>;

// Largest finite lag representable at time t: t exactly, min(t, D-1) truncated.
int max_lag(std::size_t t, Truncation D);

// Value a "far" counter renders as at time t: t+1 exactly, min(t+1, D) truncated.
int far_rendered(std::size_t t, Truncation D);

// Per-AR-regime counters. Internally an entry is a lag 1..max_lag or kFar,
// which stands for "never visited" (and, under truncation, "lag >= D").
// kFar compares greater than any lag, so internal and rendered orders agree.
class CounterVector {
 public:
  static constexpr std::uint16_t kFar = 0xFFFF;

  CounterVector() = default;
  explicit CounterVector(int k);  // all entries far

  int size() const { return k_; }
  std::uint16_t operator[](int i) const { return v_[i]; }
  std::uint16_t& operator[](int i) { return v_[i]; }
  bool is_far(int i) const { return v_[i] == kFar; }

  // Order-preserving packing (16 bits per entry, first entry most significant).
  std::uint64_t key() const;

  std::vector<int> rendered(std::size_t t, Truncation D) const;
  // Inverse of rendered(); throws ValidationError on out-of-range entries.
  static CounterVector from_rendered(const std::vector<int>& n, std::size_t t, Truncation D);

  bool operator==(const CounterVector& o) const { return k_ == o.k_ && key() == o.key(); }
  bool operator<(const CounterVector& o) const { return key() < o.key(); }

 private:
  std::array<std::uint16_t, kMaxArRegimes> v_{};
  int k_ = 0;
};

struct AugmentedState {
  CounterVector counters;
  int regime = 0;  // 0-based
  bool operator==(const AugmentedState&) const = default;
};

// Lemma 1 set S^(t) (or its truncated analogue), in lexicographic order.
std::vector<CounterVector> enumerate_counters(std::size_t t, int k, Truncation D = std::nullopt);

// Counter vectors the augmented chain can actually occupy at time t. Equals
// enumerate_counters when some regime is i.i.d.; when every regime is AR1
// the chain visits one of them at t-1, so for t >= 1 some entry equals 1.
std::vector<CounterVector> reachable_counters(std::size_t t, int k, bool has_iid,
                                              Truncation D = std::nullopt);

// Closed form sum_{m=0}^{min(t,k)} C(t,m) C(k,m) m!. Throws NumericalError on overflow.
std::uint64_t cardinality(std::size_t t, int k);

// Transition of the augmented chain: resets the counter of the current
// regime when it is AR1, advances every other counter, clamps at D.
CounterVector advance(const CounterVector& n, int regime, std::size_t t, Truncation D);
AugmentedState successor(const AugmentedState& state, int next_regime, std::size_t t, int k,
                         Truncation D = std::nullopt);

// Preimages of counters n_t at time t >= 1 under the transition rule.
// reset_regime >= 0: R_{t-1} must be that AR1 regime and `counters` lists
// every admissible n_{t-1}. reset_regime < 0: R_{t-1} ranges over the
// i.i.d. regimes listed in `regimes`.
struct Predecessors {
  int reset_regime = -1;
  std::vector<CounterVector> counters;
  std::vector<int> regimes;
};

bool is_admissible(const CounterVector& n, std::size_t t, Truncation D);

Predecessors predecessors(const CounterVector& n_t, std::size_t t, int num_regimes,
                          Truncation D = std::nullopt);

// Dense per-time index over a sorted list of counter vectors.
class StateLayer {
 public:
  StateLayer() = default;
  StateLayer(std::vector<CounterVector> states, std::size_t t, Truncation D);

  std::size_t size() const { return states_.size(); }
  const CounterVector& operator[](std::size_t i) const { return states_[i]; }
  const std::vector<CounterVector>& states() const { return states_; }

  // Index of n, or npos when n is not in the layer.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t find(const CounterVector& n) const;

 private:
  std::size_t dense_slot(const CounterVector& n) const;

  std::vector<CounterVector> states_;
  int base_ = 0;
  int k_ = 0;
  std::vector<std::uint32_t> dense_;
  std::unordered_map<std::uint64_t, std::uint32_t> sparse_;
};

}  // namespace mrs

#endif  // MRS_STATE_SPACE_HPP
