#pragma once

#include <cstddef>

namespace ordhmm {

// Global tolerances. Every validity and exactness check in the library reads
// from here so that tests and reports share one surface.
struct Tolerances {
  // Probability vectors must sum to one within this bound.
  double validity = 1e-12;
  // Agreement between two exact routes to the same quantity.
  double exactness = 1e-10;
};

inline constexpr Tolerances kTolerances{};

// Default cap on enumerated (atom, path) terms for the exact engine.
inline constexpr std::size_t kDefaultBudget = 10'000'000;

// Full permutation enumeration is only offered up to this many states.
inline constexpr int kMaxPermutationStates = 8;

}  // namespace ordhmm
