#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ordhmm/emission.hpp"
#include "ordhmm/error.hpp"
#include "ordhmm/forward.hpp"
#include "ordhmm/model.hpp"
#include "ordhmm/rng.hpp"

namespace ordhmm {

// Parameters of the sequentially ordered model: labels mean order of first
// appearance, and the hidden chain always starts at (z, m) = (1, 1).
struct OrderedHmmParams {
  TransitionMatrix q;
  Emission emission;

  [[nodiscard]] int states() const { return q.states(); }
};

inline void validate(const OrderedHmmParams& p) {
  validate(p.emission);
  if (num_states(p.emission) != p.states())
    throw DimensionMismatch("emission state count differs from transition matrix size");
}

// Hidden path of the ordered model, 0-based: z_t in 0..m_t, m_t counts the
// appeared states minus one.
struct OrderedPath {
  std::vector<int> z;
  std::vector<int> m;

  [[nodiscard]] std::size_t size() const { return z.size(); }
  friend bool operator==(const OrderedPath&, const OrderedPath&) = default;
  friend auto operator<=>(const OrderedPath&, const OrderedPath&) = default;
};

inline void validate_path(const OrderedPath& p, int k) {
  if (p.z.empty() || p.z.size() != p.m.size()) throw InvalidPath("ordered path must be non-empty with |z| = |m|");
  if (p.z[0] != 0 || p.m[0] != 0) throw InvalidPath("ordered path must start at (z, m) = (1, 1)");
  for (std::size_t t = 0; t < p.z.size(); ++t) {
    if (p.z[t] < 0 || p.z[t] > p.m[t] || p.m[t] >= k) throw InvalidPath("ordered path violates z <= m <= K");
    if (t == 0) continue;
    if (p.m[t] != std::max(p.m[t - 1], p.z[t])) throw InvalidPath("ordered path violates m_{t+1} = max(m_t, z_{t+1})");
    if (p.z[t] > p.m[t - 1] + 1) throw InvalidPath("ordered path jumps past the next unseen label");
  }
}

// Flat index of expanded state (k, m), k <= m, laid out row-major in (m, k):
// block m holds (0,m), (1,m), ..., (m,m).
inline int expanded_index(int k, int m) { return m * (m + 1) / 2 + k; }
inline int expanded_size(int k) { return k * (k + 1) / 2; }

struct ExpandedState {
  int k;
  int m;
};

struct ExpandedChain {
  int states = 0;  // K
  Eigen::MatrixXd kernel;
  std::vector<ExpandedState> pairs;  // flat index -> (k, m)

  [[nodiscard]] int size() const { return static_cast<int>(pairs.size()); }
  [[nodiscard]] int index(int k, int m) const { return expanded_index(k, m); }
};

// Probability of moving from label k with m+1 labels seen to label l:
// q_kl for l <= m, sum_{i > m} q_ki for l = m+1, zero otherwise.
inline double ordered_transition(const TransitionMatrix& q, int k, int m, int l) {
  const int n = q.states();
  if (k > m || l < 0) return 0.0;
  if (l <= m) return q(k, l);
  if (l == m + 1 && l < n) {
    double s = 0.0;
    for (int i = m + 1; i < n; ++i) s += q(k, i);
    return s;
  }
  return 0.0;
}

inline ExpandedChain build_expanded_chain(const OrderedHmmParams& params) {
  validate(params);
  const int n = params.states();
  ExpandedChain chain;
  chain.states = n;
  chain.pairs.reserve(static_cast<std::size_t>(expanded_size(n)));
  for (int m = 0; m < n; ++m)
    for (int k = 0; k <= m; ++k) chain.pairs.push_back({k, m});
  const int size = chain.size();
  chain.kernel = Eigen::MatrixXd::Zero(size, size);
  for (int from = 0; from < size; ++from) {
    const auto [k, m] = chain.pairs[static_cast<std::size_t>(from)];
    for (int l = 0; l <= m; ++l) chain.kernel(from, expanded_index(l, m)) = params.q(k, l);
    if (m + 1 < n) chain.kernel(from, expanded_index(m + 1, m + 1)) = ordered_transition(params.q, k, m, m + 1);
  }
  return chain;
}

// Degenerate start: all mass on (1, 1).
inline Eigen::VectorXd ordered_initial(const ExpandedChain& chain) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(chain.size());
  v(0) = 1.0;
  return v;
}

// Observation densities lifted onto expanded states: column (k, m) is f(y|xi_k).
inline Eigen::MatrixXd expanded_likelihood(const ExpandedChain& chain, const Eigen::MatrixXd& lik) {
  Eigen::MatrixXd out(lik.rows(), chain.size());
  for (int j = 0; j < chain.size(); ++j) out.col(j) = lik.col(chain.pairs[static_cast<std::size_t>(j)].k);
  return out;
}

struct OrderedSample {
  OrderedPath path;
  Observations observations;
};

inline OrderedSample simulate_ordered(const OrderedHmmParams& params, std::size_t horizon, std::uint64_t seed) {
  validate(params);
  const int n = params.states();
  Rng rng = make_rng(seed, 2);
  OrderedSample out{OrderedPath{}, empty_series(params.emission)};
  out.path.z.reserve(horizon + 1);
  out.path.m.reserve(horizon + 1);
  int z = 0;
  int m = 0;
  std::vector<double> w;
  for (std::size_t t = 0; t <= horizon; ++t) {
    if (t > 0) {
      w.assign(static_cast<std::size_t>(std::min(m + 2, n)), 0.0);
      for (int l = 0; l < static_cast<int>(w.size()); ++l) w[l] = ordered_transition(params.q, z, m, l);
      z = sample_index(rng, w);
      m = std::max(m, z);
    }
    out.path.z.push_back(z);
    out.path.m.push_back(m);
    emit(params.emission, z, rng, out.observations);
  }
  return out;
}

inline ForwardPass forward_ordered(const OrderedHmmParams& params, const ExpandedChain& chain, const Observations& y) {
  return scaled_forward(ordered_initial(chain), chain.kernel,
                        expanded_likelihood(chain, likelihood_matrix(params.emission, y)));
}

// log sum over ordered paths of p(z, m | theta_bar) p(y | z, theta_bar)
inline double loglik_ordered(const OrderedHmmParams& params, const Observations& y) {
  const ExpandedChain chain = build_expanded_chain(params);
  return forward_ordered(params, chain, y).loglik;
}

// Filtering distribution of m_T (number of appeared states) given y_{0:T};
// entry j is P(m_T = j+1 | y).
inline std::vector<double> m_posterior(const OrderedHmmParams& params, const Observations& y) {
  const ExpandedChain chain = build_expanded_chain(params);
  const ForwardPass pass = forward_ordered(params, chain, y);
  if (!pass.finite) throw Error("m_posterior: observations have zero likelihood");
  const int n = params.states();
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  const auto last = pass.filtered.rows() - 1;
  for (int m = 0; m < n; ++m) {
    const int begin = expanded_index(0, m);
    out[static_cast<std::size_t>(m)] = pass.filtered.row(last).segment(begin, m + 1).sum();
  }
  return out;
}

// Converts a flat expanded-state path into (z, m).
inline OrderedPath to_pairs(const ExpandedChain& chain, const std::vector<int>& flat) {
  OrderedPath p;
  p.z.reserve(flat.size());
  p.m.reserve(flat.size());
  for (int j : flat) {
    p.z.push_back(chain.pairs[static_cast<std::size_t>(j)].k);
    p.m.push_back(chain.pairs[static_cast<std::size_t>(j)].m);
  }
  return p;
}

// Standard-model parameters carrying the same numbers, for comparisons.
inline StandardHmmParams as_standard(const OrderedHmmParams& p, InitialMode initial = StationaryInitial{}) {
  return StandardHmmParams{p.q, p.emission, std::move(initial)};
}

inline OrderedHmmParams as_ordered(const StandardHmmParams& p) { return OrderedHmmParams{p.q, p.emission}; }

// Same relabeling map as for the standard model, without an initial law.
inline OrderedHmmParams relabel_params(const OrderedHmmParams& params, const Permutation& tau) {
  return OrderedHmmParams{params.q.permuted(tau), permute(params.emission, tau)};
}

}  // namespace ordhmm
