#include "mrs/simulator.hpp"

#include <cmath>

#include "mrs/errors.hpp"

namespace mrs {

namespace {

int draw_regime(std::mt19937_64& rng, const double* probs, int M) {
  std::discrete_distribution<int> d(probs, probs + M);
  return d(rng);
}

double stationary_draw(const RegimeSpec& r, std::mt19937_64& rng) {
  std::normal_distribution<double> n(r.alpha / (1.0 - r.phi), std::sqrt(r.sigma2 / (1.0 - r.phi * r.phi)));
  return n(rng);
}

std::vector<int> simulate_chain(const MrsModel& m, std::size_t T, std::uint64_t seed) {
  std::mt19937_64 rng = substream(seed, 0);
  const int M = m.num_regimes();
  std::vector<int> r(T + 1);
  r[0] = draw_regime(rng, m.pi.data(), M);
  std::vector<double> row(M);
  for (std::size_t t = 1; t <= T; ++t) {
    for (int j = 0; j < M; ++j) row[j] = m.P(r[t - 1], j);
    r[t] = draw_regime(rng, row.data(), M);
  }
  return r;
}

}  // namespace

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t component) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(component), static_cast<std::uint32_t>(component >> 32)};
  return std::mt19937_64(seq);
}

double draw_iid(const RegimeSpec& r, std::mt19937_64& rng) {
  switch (r.kind) {
    case RegimeKind::IidNormal: {
      std::normal_distribution<double> n(r.mu, std::sqrt(r.sigma2));
      return n(rng);
    }
    case RegimeKind::IidShiftedGamma: {
      std::gamma_distribution<double> g(r.mu, r.sigma2);
      return r.q + r.sign * g(rng);
    }
    case RegimeKind::IidShiftedLogNormal: {
      std::lognormal_distribution<double> l(r.mu, std::sqrt(r.sigma2));
      return r.q + r.sign * l(rng);
    }
    case RegimeKind::AR1: break;
  }
  throw ValidationError("draw_iid called on an AR1 regime");
}

SimResult simulate(const MrsModel& model, std::size_t T, std::uint64_t seed) {
  require_valid(model);
  const int M = model.num_regimes();
  const int k = model.num_ar();
  SimResult out;
  out.seed = seed;
  out.r = simulate_chain(model, T, seed);
  out.x.resize(T + 1);
  out.latents.assign(k, std::vector<double>(T + 1));
  std::vector<std::vector<double>> iid(M - k, std::vector<double>(T + 1));
  for (int i = 0; i < M; ++i) {
    std::mt19937_64 rng = substream(seed, 1 + i);
    const RegimeSpec& reg = model.regimes[i];
    if (reg.is_ar()) {
      auto& b = out.latents[i];
      std::normal_distribution<double> eps(0.0, std::sqrt(reg.sigma2));
      b[0] = stationary_draw(reg, rng);
      for (std::size_t t = 1; t <= T; ++t) b[t] = reg.alpha + reg.phi * b[t - 1] + eps(rng);
    } else {
      for (std::size_t t = 0; t <= T; ++t) iid[i - k][t] = draw_iid(reg, rng);
    }
  }
  for (std::size_t t = 0; t <= T; ++t) {
    int j = out.r[t];
    out.x[t] = j < k ? out.latents[j][t] : iid[j - k][t];
  }
  return out;
}

SimResult simulate_dependent(const DependentMrsModel& model, std::size_t T, std::uint64_t seed) {
  const MrsModel& m = model.params;
  require_valid(m, Layout::Dependent);
  const int M = m.num_regimes();
  SimResult out;
  out.seed = seed;
  out.r = simulate_chain(m, T, seed);
  out.x.resize(T + 1);
  std::vector<std::mt19937_64> rngs;
  for (int i = 0; i < M; ++i) rngs.push_back(substream(seed, 1 + i));
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::size_t t = 0; t <= T; ++t) {
    // Every regime consumes one draw per step so streams stay aligned.
    std::vector<double> draw(M);
    for (int i = 0; i < M; ++i) {
      const RegimeSpec& reg = m.regimes[i];
      if (!reg.is_ar()) {
        draw[i] = draw_iid(reg, rngs[i]);
      } else if (t == 0) {
        draw[i] = stationary_draw(reg, rngs[i]);
      } else {
        draw[i] = reg.alpha + reg.phi * out.x[t - 1] + std::sqrt(reg.sigma2) * z(rngs[i]);
      }
    }
    out.x[t] = draw[out.r[t]];
  }
  return out;
}

}  // namespace mrs
