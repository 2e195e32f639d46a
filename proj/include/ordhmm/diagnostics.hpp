#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace ordhmm {

struct ChainSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double mcse = 0.0;  // Monte Carlo standard error of the mean
  double ess = 0.0;   // effective sample size
};

// Non-overlapping batch means with floor(sqrt(n)) batches.
inline ChainSummary batch_means(std::span<const double> x) {
  ChainSummary s;
  s.n = x.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double v : x) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double ss = 0.0;
  for (double v : x) ss += (v - s.mean) * (v - s.mean);
  const double var = s.n > 1 ? ss / static_cast<double>(s.n - 1) : 0.0;
  s.sd = std::sqrt(var);
  if (s.n < 4) {
    s.mcse = s.sd / std::sqrt(static_cast<double>(s.n));
    s.ess = static_cast<double>(s.n);
    return s;
  }
  const auto batches = static_cast<std::size_t>(std::sqrt(static_cast<double>(s.n)));
  const std::size_t size = s.n / batches;
  double bsum = 0.0, bss = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    double m = 0.0;
    for (std::size_t i = 0; i < size; ++i) m += x[b * size + i];
    m /= static_cast<double>(size);
    bsum += m;
    bss += m * m;
  }
  const double bmean = bsum / static_cast<double>(batches);
  const double bvar = (bss - static_cast<double>(batches) * bmean * bmean) / static_cast<double>(batches - 1);
  if (!(bvar > 0.0)) {
    s.mcse = 0.0;
    s.ess = static_cast<double>(s.n);
    return s;
  }
  // Var(mean) ~ size * bvar / n.
  s.mcse = std::sqrt(static_cast<double>(size) * bvar / static_cast<double>(s.n));
  s.ess = var > 0.0 ? var / (s.mcse * s.mcse) : static_cast<double>(s.n);
  return s;
}

}  // namespace ordhmm
