#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ordhmm/error.hpp"
#include "ordhmm/model.hpp"
#include "ordhmm/ordered.hpp"
#include "ordhmm/permutation.hpp"
#include "ordhmm/rng.hpp"

namespace ordhmm {

// Distinct states in order of first appearance.
struct AppearanceRecord {
  std::vector<int> seen;

  [[nodiscard]] int size() const { return static_cast<int>(seen.size()); }
  [[nodiscard]] bool complete(int k) const { return size() == k; }
  friend bool operator==(const AppearanceRecord&, const AppearanceRecord&) = default;
};

inline AppearanceRecord appearance_record(const StatePath& s) {
  AppearanceRecord r;
  for (int v : s)
    if (std::find(r.seen.begin(), r.seen.end(), v) == r.seen.end()) r.seen.push_back(v);
  return r;
}

// z_t is the position of s_t in the running appearance record, m_t its
// running maximum. The result does not depend on how the states are labeled.
inline OrderedPath to_ordered_path(const StatePath& s) {
  if (s.empty()) throw InvalidPath("state path is empty");
  OrderedPath out;
  out.z.reserve(s.size());
  out.m.reserve(s.size());
  std::vector<int> seen;
  int m = 0;
  for (int v : s) {
    auto it = std::find(seen.begin(), seen.end(), v);
    if (it == seen.end()) {
      seen.push_back(v);
      it = seen.end() - 1;
    }
    const int z = static_cast<int>(it - seen.begin());
    m = std::max(m, z);
    out.z.push_back(z);
    out.m.push_back(m);
  }
  return out;
}

// theta_bar = sigma(theta): q_bar_kl = q_{sigma(k) sigma(l)}, xi_bar_k = xi_{sigma(k)}.
inline OrderedHmmParams pushforward_params(const StandardHmmParams& theta, const Permutation& sigma) {
  if (sigma.size() < theta.states()) throw IncompleteRecord("appearance record does not cover every state");
  if (sigma.size() != theta.states()) throw DimensionMismatch("permutation size differs from state count");
  return OrderedHmmParams{theta.q.permuted(sigma), permute(theta.emission, sigma)};
}

inline OrderedHmmParams pushforward_params(const StandardHmmParams& theta, const AppearanceRecord& sigma) {
  if (!sigma.complete(theta.states())) throw IncompleteRecord("appearance record does not cover every state");
  return pushforward_params(theta, Permutation(sigma.seen));
}

// First-exit probabilities out of a set S of visited states:
//   h_j(i) = q_ij + sum_{l in S} q_il h_j(l),   i in S, j not in S,
// i.e. (I - Q_SS) H = Q_{S, S^c}. One dense solve per distinct S, cached.
class FirstExitSolver {
 public:
  explicit FirstExitSolver(const TransitionMatrix& q) : q_(q) {
    if (q.states() > 31) throw DimensionMismatch("first-exit solver supports at most 31 states");
  }

  // Probability that a chain at `from` (a member of S) next visits a state
  // outside S at `to`.
  double exit_probability(std::uint32_t seen_mask, int from, int to) {
    if (!(seen_mask >> from & 1u)) throw Error("exit_probability: origin not in the seen set");
    if (seen_mask >> to & 1u) return 0.0;
    const Entry& e = entry(seen_mask);
    return e.h(e.local[static_cast<std::size_t>(from)], to);
  }

  // Full |S| x K table; columns of states in S are zero.
  const Eigen::MatrixXd& table(std::uint32_t seen_mask) { return entry(seen_mask).h; }

  [[nodiscard]] std::vector<int> members(std::uint32_t seen_mask) const {
    std::vector<int> out;
    for (int i = 0; i < q_.states(); ++i)
      if (seen_mask >> i & 1u) out.push_back(i);
    return out;
  }

 private:
  struct Entry {
    Eigen::MatrixXd h;
    std::vector<int> local;
  };

  const Entry& entry(std::uint32_t mask) {
    if (auto it = cache_.find(mask); it != cache_.end()) return it->second;
    const int n = q_.states();
    const std::vector<int> in = members(mask);
    const auto s = static_cast<Eigen::Index>(in.size());
    Entry e;
    e.local.assign(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < s; ++i) e.local[static_cast<std::size_t>(in[i])] = static_cast<int>(i);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(s, s);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(s, n);
    for (Eigen::Index i = 0; i < s; ++i) {
      for (Eigen::Index l = 0; l < s; ++l) a(i, l) -= q_(in[i], in[l]);
      for (int j = 0; j < n; ++j)
        if (!(mask >> j & 1u)) rhs(i, j) = q_(in[i], j);
    }
    e.h = static_cast<int>(s) == n ? rhs : Eigen::MatrixXd(a.partialPivLu().solve(rhs));
    return cache_.emplace(mask, std::move(e)).first->second;
  }

  const TransitionMatrix& q_;
  std::unordered_map<std::uint32_t, Entry> cache_;
};

inline void require_strictly_positive(const TransitionMatrix& q) {
  if (!q.strictly_positive())
    throw ConditionViolated("appearance-order probabilities require a strictly positive transition matrix");
}

namespace detail {

// Product of successive first-exit probabilities along order tau, starting at
// position `known` (tau[0..known) already seen) with the chain currently at `at`.
inline double completion_product(FirstExitSolver& solver, const Permutation& tau, int known, int at) {
  const int n = tau.size();
  std::uint32_t mask = 0;
  for (int r = 0; r < known; ++r) mask |= 1u << tau(r);
  double p = 1.0;
  for (int r = known; r < n; ++r) {
    p *= solver.exit_probability(mask, at, tau(r));
    mask |= 1u << tau(r);
    at = tau(r);
  }
  return p;
}

inline void check_prefix(const AppearanceRecord& rec, const Permutation& tau) {
  for (int i = 0; i < rec.size(); ++i)
    if (tau(i) != rec.seen[static_cast<std::size_t>(i)])
      throw InconsistentPrefix("appearance order disagrees with the observed path prefix");
}

}  // namespace detail

// P(sigma = tau | theta), or P(sigma = tau | s_{0:t}, theta) when a prefix is
// given. sigma is the complete first-appearance order of the infinite path.
inline double appearance_order_prob(const StandardHmmParams& theta, const Permutation& tau,
                                    const std::optional<StatePath>& prefix = std::nullopt) {
  validate(theta);
  require_strictly_positive(theta.q);
  if (tau.size() != theta.states()) throw DimensionMismatch("permutation size differs from state count");
  FirstExitSolver solver(theta.q);
  if (!prefix) {
    const Eigen::VectorXd init = initial_distribution(theta);
    return init(tau(0)) * detail::completion_product(solver, tau, 1, tau(0));
  }
  validate_path(*prefix, theta.states());
  const AppearanceRecord rec = appearance_record(*prefix);
  detail::check_prefix(rec, tau);
  return detail::completion_product(solver, tau, rec.size(), prefix->back());
}

struct WeightedOrder {
  Permutation order;
  double probability;
};

// Every completion of the prefix's appearance record, with its exact
// conditional probability. Probabilities sum to one.
inline std::vector<WeightedOrder> completion_distribution(const StandardHmmParams& theta, const StatePath& prefix,
                                                          FirstExitSolver& solver) {
  const int n = theta.states();
  const AppearanceRecord rec = appearance_record(prefix);
  std::vector<int> rest;
  for (int i = 0; i < n; ++i)
    if (std::find(rec.seen.begin(), rec.seen.end(), i) == rec.seen.end()) rest.push_back(i);
  std::vector<WeightedOrder> out;
  do {
    std::vector<int> images = rec.seen;
    images.insert(images.end(), rest.begin(), rest.end());
    Permutation tau(std::move(images));
    const double p = detail::completion_product(solver, tau, rec.size(), prefix.back());
    out.push_back({std::move(tau), p});
  } while (std::next_permutation(rest.begin(), rest.end()));
  return out;
}

inline std::vector<WeightedOrder> completion_distribution(const StandardHmmParams& theta, const StatePath& prefix) {
  validate(theta);
  require_strictly_positive(theta.q);
  validate_path(prefix, theta.states());
  FirstExitSolver solver(theta.q);
  return completion_distribution(theta, prefix, solver);
}

// P(sigma = tau | theta) for all K! orders, in lexicographic order of tau.
inline std::vector<WeightedOrder> order_distribution(const StandardHmmParams& theta) {
  validate(theta);
  require_strictly_positive(theta.q);
  const Eigen::VectorXd init = initial_distribution(theta);
  FirstExitSolver solver(theta.q);
  std::vector<WeightedOrder> out;
  for (auto& tau : all_permutations(theta.states())) {
    const double p = init(tau(0)) * detail::completion_product(solver, tau, 1, tau(0));
    out.push_back({std::move(tau), p});
  }
  return out;
}

// Samples the unresolved part of sigma given the observed prefix.
inline Permutation sample_completion(const StandardHmmParams& theta, const StatePath& prefix, Rng& rng) {
  const AppearanceRecord rec = appearance_record(prefix);
  if (rec.complete(theta.states())) return Permutation(rec.seen);
  const auto dist = completion_distribution(theta, prefix);
  std::vector<double> w;
  w.reserve(dist.size());
  for (const auto& d : dist) w.push_back(d.probability);
  return dist[static_cast<std::size_t>(sample_index(rng, w))].order;
}

}  // namespace ordhmm
