#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ordhmm/error.hpp"

namespace ordhmm {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream splitting: every consumer of randomness gets its own
// engine keyed by (root seed, stream id), so composing subcommands or running
// chains in parallel never shares state.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(derive_seed(seed, stream));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Draws an index with probability proportional to weights (need not be
// normalized). Throws if the weights have no positive mass.
inline int sample_index(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error("sample_index: weights have no positive mass");
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = static_cast<int>(i);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

inline std::vector<double> sample_dirichlet(Rng& rng, std::span<const double> alpha) {
  std::vector<double> out(alpha.size());
  if (alpha.size() == 1) {
    out[0] = 1.0;
    return out;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = std::gamma_distribution<double>(alpha[i], 1.0)(rng);
    total += out[i];
  }
  if (!(total > 0.0)) {
    // All gammas underflowed (tiny concentrations); fall back to a single vertex.
    std::vector<double> w(alpha.begin(), alpha.end());
    const int k = sample_index(rng, w);
    std::fill(out.begin(), out.end(), 0.0);
    out[k] = 1.0;
    return out;
  }
  for (double& x : out) x /= total;
  return out;
}

inline double sample_normal(Rng& rng, double mean, double sd) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

}  // namespace ordhmm
