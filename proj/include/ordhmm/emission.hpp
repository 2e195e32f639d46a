#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ordhmm/config.hpp"
#include "ordhmm/error.hpp"
#include "ordhmm/permutation.hpp"

namespace ordhmm {

// One probability vector over L symbols per hidden state.
struct CategoricalEmission {
  std::vector<std::vector<double>> probs;

  [[nodiscard]] int states() const { return static_cast<int>(probs.size()); }
  [[nodiscard]] int symbols() const { return probs.empty() ? 0 : static_cast<int>(probs.front().size()); }
  friend bool operator==(const CategoricalEmission&, const CategoricalEmission&) = default;
};

// Normal observations with a per-state mean and a shared, known variance.
struct GaussianEmission {
  std::vector<double> means;
  double variance = 1.0;

  [[nodiscard]] int states() const { return static_cast<int>(means.size()); }
  friend bool operator==(const GaussianEmission&, const GaussianEmission&) = default;
};

using Emission = std::variant<CategoricalEmission, GaussianEmission>;

// Categorical symbols are 0-based in process.
using Symbols = std::vector<int>;
using Reals = std::vector<double>;
using Observations = std::variant<Symbols, Reals>;

inline std::size_t series_length(const Observations& y) {
  return std::visit([](const auto& v) { return v.size(); }, y);
}

inline Observations prefix(const Observations& y, std::size_t n) {
  return std::visit(
      [n](const auto& v) -> Observations {
        using V = std::decay_t<decltype(v)>;
        return V(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(n, v.size())));
      },
      y);
}

inline int num_states(const Emission& e) {
  return std::visit([](const auto& x) { return x.states(); }, e);
}

inline bool is_categorical(const Emission& e) { return std::holds_alternative<CategoricalEmission>(e); }

inline std::string family_name(const Emission& e) { return is_categorical(e) ? "categorical" : "gaussian"; }

inline void validate(const Emission& e) {
  if (const auto* c = std::get_if<CategoricalEmission>(&e)) {
    if (c->probs.empty()) throw ValidationError("categorical emission needs at least one state");
    const int l = c->symbols();
    if (l < 1) throw ValidationError("categorical emission needs at least one symbol");
    for (const auto& row : c->probs) {
      if (static_cast<int>(row.size()) != l)
        throw DimensionMismatch("categorical emission rows must share the symbol count");
      double s = 0.0;
      for (double p : row) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("categorical probabilities must be >= 0");
        s += p;
      }
      if (std::abs(s - 1.0) > kTolerances.validity)
        throw ValidationError("categorical probabilities must sum to 1");
    }
  } else {
    const auto& g = std::get<GaussianEmission>(e);
    if (g.means.empty()) throw ValidationError("gaussian emission needs at least one state");
    if (!(g.variance > 0.0) || !std::isfinite(g.variance))
      throw ValidationError("gaussian variance must be positive");
    for (double m : g.means)
      if (!std::isfinite(m)) throw ValidationError("gaussian means must be finite");
  }
}

// Throws unless the series is non-empty and of the type the family expects.
inline void check_compatible(const Emission& e, const Observations& y) {
  if (series_length(y) == 0) throw DimensionMismatch("observation series is empty");
  if (const auto* c = std::get_if<CategoricalEmission>(&e)) {
    const auto* s = std::get_if<Symbols>(&y);
    if (!s) throw DimensionMismatch("categorical emission requires integer symbols");
    for (int v : *s)
      if (v < 0 || v >= c->symbols()) throw DimensionMismatch("symbol out of range for categorical emission");
  } else if (!std::holds_alternative<Reals>(y)) {
    throw DimensionMismatch("gaussian emission requires real-valued observations");
  }
}

inline double gaussian_density(double x, double mean, double variance) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

// f(y_t | xi_k) for a single time and state.
inline double density(const Emission& e, int state, const Observations& y, std::size_t t) {
  if (const auto* c = std::get_if<CategoricalEmission>(&e)) return c->probs[state][std::get<Symbols>(y)[t]];
  const auto& g = std::get<GaussianEmission>(e);
  return gaussian_density(std::get<Reals>(y)[t], g.means[state], g.variance);
}

// (T+1) x K matrix of f(y_t | xi_k).
inline Eigen::MatrixXd likelihood_matrix(const Emission& e, const Observations& y) {
  check_compatible(e, y);
  const auto n = static_cast<Eigen::Index>(series_length(y));
  const int k = num_states(e);
  Eigen::MatrixXd out(n, k);
  for (Eigen::Index t = 0; t < n; ++t)
    for (int s = 0; s < k; ++s) out(t, s) = density(e, s, y, static_cast<std::size_t>(t));
  return out;
}

// xi'_k = xi_{tau(k)}.
inline Emission permute(const Emission& e, const Permutation& tau) {
  if (tau.size() != num_states(e)) throw DimensionMismatch("permutation size differs from state count");
  if (const auto* c = std::get_if<CategoricalEmission>(&e)) {
    CategoricalEmission out;
    out.probs.reserve(c->probs.size());
    for (int k = 0; k < tau.size(); ++k) out.probs.push_back(c->probs[tau(k)]);
    return out;
  }
  const auto& g = std::get<GaussianEmission>(e);
  GaussianEmission out{.means = {}, .variance = g.variance};
  for (int k = 0; k < tau.size(); ++k) out.means.push_back(g.means[tau(k)]);
  return out;
}

inline double max_abs_difference(const Emission& a, const Emission& b) {
  if (a.index() != b.index() || num_states(a) != num_states(b)) return std::numeric_limits<double>::infinity();
  if (const auto* ca = std::get_if<CategoricalEmission>(&a)) {
    const auto& cb = std::get<CategoricalEmission>(b);
    if (ca->symbols() != cb.symbols()) return std::numeric_limits<double>::infinity();
    double d = 0.0;
    for (int k = 0; k < ca->states(); ++k)
      for (int l = 0; l < ca->symbols(); ++l) d = std::max(d, std::abs(ca->probs[k][l] - cb.probs[k][l]));
    return d;
  }
  const auto& ga = std::get<GaussianEmission>(a);
  const auto& gb = std::get<GaussianEmission>(b);
  double d = std::abs(ga.variance - gb.variance);
  for (int k = 0; k < ga.states(); ++k) d = std::max(d, std::abs(ga.means[k] - gb.means[k]));
  return d;
}

}  // namespace ordhmm
