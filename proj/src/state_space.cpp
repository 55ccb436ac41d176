#include "mrs/state_space.hpp"

#include <algorithm>
#include <string>

#include "mrs/errors.hpp"

namespace mrs {

int max_lag(std::size_t t, Truncation D) {
  int L = static_cast<int>(t);
  if (D) L = std::min(L, *D - 1);
  return L;
}

int far_rendered(std::size_t t, Truncation D) {
  int v = static_cast<int>(t) + 1;
  if (D) v = std::min(v, *D);
  return v;
}

CounterVector::CounterVector(int k) : k_(k) {
  if (k < 0 || k > kMaxArRegimes)
    throw ValidationError("counter vectors support 0.." + std::to_string(kMaxArRegimes) +
                          " AR1 regimes");
  v_.fill(kFar);
}

std::uint64_t CounterVector::key() const {
  std::uint64_t key = 0;
  for (int i = 0; i < k_; ++i) key = (key << 16) | v_[i];
  return key;
}

std::vector<int> CounterVector::rendered(std::size_t t, Truncation D) const {
  std::vector<int> out(k_);
  int far = far_rendered(t, D);
  for (int i = 0; i < k_; ++i) out[i] = is_far(i) ? far : v_[i];
  return out;
}

CounterVector CounterVector::from_rendered(const std::vector<int>& n, std::size_t t, Truncation D) {
  CounterVector c(static_cast<int>(n.size()));
  int L = max_lag(t, D);
  int far = far_rendered(t, D);
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] >= 1 && n[i] <= L)
      c.v_[i] = static_cast<std::uint16_t>(n[i]);
    else if (n[i] == far)
      c.v_[i] = kFar;
    else
      throw ValidationError("counter value " + std::to_string(n[i]) + " out of range at t=" +
                            std::to_string(t));
  }
  return c;
}

namespace {

void enumerate_rec(CounterVector& cur, int pos, int k, int L, bool need_one, bool has_one,
                   std::vector<CounterVector>& out) {
  if (pos == k) {
    if (!need_one || has_one) out.push_back(cur);
    return;
  }
  // The last slot must supply the required 1 if nothing earlier did.
  const bool last_needs_one = need_one && !has_one && pos == k - 1;
  const int hi = last_needs_one ? std::min(L, 1) : L;
  for (int v = 1; v <= hi; ++v) {
    bool clash = false;
    for (int j = 0; j < pos; ++j)
      if (cur[j] == v) clash = true;
    if (clash) continue;
    cur[pos] = static_cast<std::uint16_t>(v);
    enumerate_rec(cur, pos + 1, k, L, need_one, has_one || v == 1, out);
  }
  cur[pos] = CounterVector::kFar;
  if (!last_needs_one) enumerate_rec(cur, pos + 1, k, L, need_one, has_one, out);
}

std::vector<CounterVector> enumerate_impl(std::size_t t, int k, Truncation D, bool need_one) {
  if (k < 1 || k > kMaxArRegimes)
    throw ValidationError("k must be in 1.." + std::to_string(kMaxArRegimes));
  if (D && *D <= k) throw ValidationError("truncation D must exceed k");
  int L = max_lag(t, D);
  if (L >= CounterVector::kFar) throw ValidationError("series too long for 16-bit counters");
  std::vector<CounterVector> out;
  CounterVector cur(k);
  enumerate_rec(cur, 0, k, L, need_one && t >= 1, false, out);
  return out;
}

}  // namespace

std::vector<CounterVector> enumerate_counters(std::size_t t, int k, Truncation D) {
  return enumerate_impl(t, k, D, false);
}

std::vector<CounterVector> reachable_counters(std::size_t t, int k, bool has_iid, Truncation D) {
  return enumerate_impl(t, k, D, !has_iid);
}

std::uint64_t cardinality(std::size_t t, int k) {
  if (k < 1) throw ValidationError("cardinality: k must be >= 1");
  using u128 = unsigned __int128;
  const u128 limit = static_cast<u128>(UINT64_MAX);
  u128 total = 0;
  u128 falling = 1;  // t (t-1) ... (t-m+1) = C(t,m) m!
  u128 choose_k = 1;  // C(k,m)
  std::size_t top = std::min<std::size_t>(t, static_cast<std::size_t>(k));
  for (std::size_t m = 0; m <= top; ++m) {
    if (m > 0) {
      falling *= static_cast<u128>(t - m + 1);
      choose_k = choose_k * static_cast<u128>(k - m + 1) / m;
      if (falling > limit || choose_k > limit) throw NumericalError("cardinality overflows 64 bits");
    }
    u128 term = falling * choose_k;
    if (choose_k != 0 && term / choose_k != falling) throw NumericalError("cardinality overflows 64 bits");
    total += term;
    if (total > limit) throw NumericalError("cardinality overflows 64 bits");
  }
  return static_cast<std::uint64_t>(total);
}

CounterVector advance(const CounterVector& n, int regime, std::size_t t, Truncation D) {
  CounterVector out = n;
  int L = max_lag(t + 1, D);
  for (int j = 0; j < n.size(); ++j) {
    if (j == regime) {
      out[j] = 1;
    } else if (!n.is_far(j)) {
      int v = n[j] + 1;
      out[j] = v > L ? CounterVector::kFar : static_cast<std::uint16_t>(v);
    }
  }
  return out;
}

AugmentedState successor(const AugmentedState& state, int next_regime, std::size_t t, int k,
                         Truncation D) {
  if (state.counters.size() != k) throw ValidationError("successor: counter length differs from k");
  return {advance(state.counters, state.regime, t, D), next_regime};
}

bool is_admissible(const CounterVector& n, std::size_t t, Truncation D) {
  int L = max_lag(t, D);
  for (int i = 0; i < n.size(); ++i) {
    if (n.is_far(i)) continue;
    if (n[i] < 1 || n[i] > L) return false;
    for (int j = 0; j < i; ++j)
      if (n[j] == n[i]) return false;
  }
  return true;
}

Predecessors predecessors(const CounterVector& n_t, std::size_t t, int num_regimes, Truncation D) {
  const int k = n_t.size();
  if (t == 0) throw ValidationError("predecessors: t must be >= 1");
  if (!is_admissible(n_t, t, D))
    throw ValidationError("predecessors: counter vector not in S^(t) at t=" + std::to_string(t));

  Predecessors out;
  for (int j = 0; j < k; ++j)
    if (n_t[j] == 1) out.reset_regime = j;

  const int L_prev = max_lag(t - 1, D);
  std::vector<std::vector<std::uint16_t>> options(k);
  for (int j = 0; j < k; ++j) {
    if (j == out.reset_regime) {
      for (int v = 1; v <= L_prev; ++v) options[j].push_back(static_cast<std::uint16_t>(v));
      options[j].push_back(CounterVector::kFar);
    } else if (n_t.is_far(j)) {
      if (D && *D - 1 <= L_prev) options[j].push_back(static_cast<std::uint16_t>(*D - 1));
      options[j].push_back(CounterVector::kFar);
    } else {
      options[j].push_back(static_cast<std::uint16_t>(n_t[j] - 1));
    }
  }

  CounterVector cur(k);
  auto rec = [&](auto&& self, int pos) -> void {
    if (pos == k) {
      if (is_admissible(cur, t - 1, D)) out.counters.push_back(cur);
      return;
    }
    for (auto v : options[pos]) {
      cur[pos] = v;
      self(self, pos + 1);
    }
  };
  rec(rec, 0);
  std::sort(out.counters.begin(), out.counters.end());

  if (out.reset_regime >= 0) {
    out.regimes.push_back(out.reset_regime);
  } else {
    for (int i = k; i < num_regimes; ++i) out.regimes.push_back(i);
    if (out.regimes.empty()) out.counters.clear();
  }
  return out;
}

StateLayer::StateLayer(std::vector<CounterVector> states, std::size_t t, Truncation D)
    : states_(std::move(states)) {
  k_ = states_.empty() ? 0 : states_.front().size();
  base_ = max_lag(t, D) + 1;
  std::uint64_t cells = 1;
  bool dense_ok = true;
  for (int i = 0; i < k_; ++i) {
    cells *= static_cast<std::uint64_t>(base_);
    if (cells > 8 * states_.size() + 64) dense_ok = false;
  }
  if (dense_ok) {
    dense_.assign(cells, UINT32_MAX);
    for (std::size_t i = 0; i < states_.size(); ++i)
      dense_[dense_slot(states_[i])] = static_cast<std::uint32_t>(i);
  } else {
    sparse_.reserve(states_.size() * 2);
    for (std::size_t i = 0; i < states_.size(); ++i)
      sparse_.emplace(states_[i].key(), static_cast<std::uint32_t>(i));
  }
}

std::size_t StateLayer::dense_slot(const CounterVector& n) const {
  std::size_t slot = 0;
  for (int i = 0; i < k_; ++i) {
    std::size_t digit = n.is_far(i) ? static_cast<std::size_t>(base_ - 1) : n[i] - 1u;
    slot = slot * static_cast<std::size_t>(base_) + digit;
  }
  return slot;
}

std::size_t StateLayer::find(const CounterVector& n) const {
  if (n.size() != k_) return npos;
  if (!dense_.empty()) {
    for (int i = 0; i < k_; ++i)
      if (!n.is_far(i) && (n[i] < 1 || n[i] >= base_)) return npos;
    auto v = dense_[dense_slot(n)];
    return v == UINT32_MAX ? npos : v;
  }
  auto it = sparse_.find(n.key());
  return it == sparse_.end() ? npos : it->second;
}

}  // namespace mrs
