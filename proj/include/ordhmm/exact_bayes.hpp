#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ordhmm/config.hpp"
#include "ordhmm/emission.hpp"
#include "ordhmm/error.hpp"
#include "ordhmm/model.hpp"
#include "ordhmm/numeric.hpp"
#include "ordhmm/ordered.hpp"
#include "ordhmm/permutation.hpp"
#include "ordhmm/relabel.hpp"

namespace ordhmm {

// ---------------------------------------------------------------------------
// Priors on finite atom sets
// ---------------------------------------------------------------------------

struct PriorAtom {
  StandardHmmParams params;
  double weight = 0.0;
};

struct DiscretePrior {
  std::vector<PriorAtom> atoms;
  [[nodiscard]] int states() const { return atoms.empty() ? 0 : atoms.front().params.states(); }
};

struct OrderedAtom {
  OrderedHmmParams params;
  double weight = 0.0;
};

struct OrderedPrior {
  std::vector<OrderedAtom> atoms;
};

inline bool same_numbers(const TransitionMatrix& a, const TransitionMatrix& b, double tol) {
  if (a.states() != b.states()) return false;
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff() <= tol;
}

inline bool same_initial(const InitialMode& a, const InitialMode& b, double tol) {
  if (a.index() != b.index()) return false;
  if (const auto* fa = std::get_if<FixedInitial>(&a)) {
    const auto& fb = std::get<FixedInitial>(b);
    if (fa->probs.size() != fb.probs.size()) return false;
    for (std::size_t i = 0; i < fa->probs.size(); ++i)
      if (std::abs(fa->probs[i] - fb.probs[i]) > tol) return false;
  }
  return true;
}

inline bool same_params(const OrderedHmmParams& a, const OrderedHmmParams& b, double tol = kTolerances.validity) {
  return same_numbers(a.q, b.q, tol) && max_abs_difference(a.emission, b.emission) <= tol;
}

inline bool same_params(const StandardHmmParams& a, const StandardHmmParams& b, double tol = kTolerances.validity) {
  return same_numbers(a.q, b.q, tol) && max_abs_difference(a.emission, b.emission) <= tol &&
         same_initial(a.initial, b.initial, tol);
}

struct PriorValidation {
  bool weights_valid = true;
  bool condition1 = true;  // closed under relabeling with equal weights
  bool condition2 = true;  // every transition matrix strictly positive
  std::vector<std::string> issues;

  [[nodiscard]] bool passed() const { return weights_valid && condition1 && condition2; }
};

// Report-style check of the two prior conditions; never throws on a failed
// condition, only on structurally broken atoms.
inline PriorValidation validate_prior(const DiscretePrior& prior) {
  PriorValidation r;
  if (prior.atoms.empty()) {
    r.weights_valid = false;
    r.issues.emplace_back("prior has no atoms");
    return r;
  }
  const int k = prior.states();
  double total = 0.0;
  for (std::size_t i = 0; i < prior.atoms.size(); ++i) {
    const auto& a = prior.atoms[i];
    validate(a.params);
    if (a.params.states() != k) throw DimensionMismatch("prior atoms disagree on the number of states");
    if (!(a.weight >= 0.0)) {
      r.weights_valid = false;
      r.issues.push_back("atom " + std::to_string(i + 1) + ": negative weight");
    }
    total += a.weight;
    if (!a.params.q.strictly_positive()) {
      r.condition2 = false;
      r.issues.push_back("atom " + std::to_string(i + 1) + ": transition matrix has zero entries");
    }
  }
  if (std::abs(total - 1.0) > kTolerances.validity) {
    r.weights_valid = false;
    r.issues.emplace_back("weights do not sum to 1");
  }
  if (k > kMaxPermutationStates) {
    r.condition1 = false;
    r.issues.emplace_back("closure check limited to K <= 8");
    return r;
  }
  // Total weight carried by atoms numerically equal to `p`.
  auto mass_of = [&](const StandardHmmParams& p) {
    double m = 0.0;
    bool found = false;
    for (const auto& a : prior.atoms)
      if (same_params(a.params, p)) {
        m += a.weight;
        found = true;
      }
    return found ? std::optional<double>(m) : std::nullopt;
  };
  const auto perms = all_permutations(k);
  for (std::size_t i = 0; i < prior.atoms.size(); ++i) {
    const double own = *mass_of(prior.atoms[i].params);
    for (const auto& tau : perms) {
      if (tau.is_identity()) continue;
      const auto other = mass_of(relabel_params(prior.atoms[i].params, tau));
      if (!other) {
        r.condition1 = false;
        r.issues.push_back("atom " + std::to_string(i + 1) + ": relabeling " + tau.to_string() + " is not an atom");
      } else if (std::abs(*other - own) > kTolerances.validity) {
        r.condition1 = false;
        r.issues.push_back("atom " + std::to_string(i + 1) + ": relabeling " + tau.to_string() +
                           " carries a different weight");
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Path enumeration and complete-data likelihoods
// ---------------------------------------------------------------------------

// Visits all K^length state paths in lexicographic order.
inline void for_each_state_path(int k, std::size_t length, const std::function<void(const StatePath&)>& fn) {
  StatePath s(length, 0);
  while (true) {
    fn(s);
    std::size_t pos = length;
    while (pos > 0) {
      --pos;
      if (++s[pos] < k) break;
      s[pos] = 0;
      if (pos == 0) return;
    }
    if (length == 0) return;
  }
}

// Visits every path satisfying the ordered-chain structure: z_0 = 0 and each
// step either revisits a seen label or opens the next one.
inline void for_each_ordered_path(int k, std::size_t length, const std::function<void(const OrderedPath&)>& fn) {
  if (length == 0) return;
  OrderedPath p;
  p.z.assign(length, 0);
  p.m.assign(length, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t t) {
    if (t == length) {
      fn(p);
      return;
    }
    const int prev_m = p.m[t - 1];
    const int top = std::min(prev_m + 1, k - 1);
    for (int l = 0; l <= top; ++l) {
      p.z[t] = l;
      p.m[t] = std::max(prev_m, l);
      rec(t + 1);
    }
  };
  rec(1);
}

// log[ iota(s_0) prod q_{s_t s_{t+1}} prod f(y_t | xi_{s_t}) ]
inline double complete_loglik(const StandardHmmParams& theta, const StatePath& s, const Observations& y) {
  validate(theta);
  validate_path(s, theta.states());
  if (s.size() != series_length(y)) throw DimensionMismatch("path and observations differ in length");
  check_compatible(theta.emission, y);
  const Eigen::VectorXd init = initial_distribution(theta);
  double lp = std::log(init(s[0]));
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (t > 0) lp += std::log(theta.q(s[t - 1], s[t]));
    lp += std::log(density(theta.emission, s[t], y, t));
  }
  return lp;
}

// Same for the ordered model: deterministic start, ordered kernel.
inline double complete_loglik(const OrderedHmmParams& theta, const OrderedPath& path, const Observations& y) {
  validate(theta);
  validate_path(path, theta.states());
  if (path.size() != series_length(y)) throw DimensionMismatch("path and observations differ in length");
  check_compatible(theta.emission, y);
  double lp = 0.0;
  for (std::size_t t = 0; t < path.size(); ++t) {
    if (t > 0) lp += std::log(ordered_transition(theta.q, path.z[t - 1], path.m[t - 1], path.z[t]));
    lp += std::log(density(theta.emission, path.z[t], y, t));
  }
  return lp;
}

inline void check_budget(std::size_t atoms, int k, std::size_t length, std::size_t budget) {
  const std::size_t terms = saturating_mul(atoms, saturating_pow(static_cast<std::size_t>(k), length));
  if (terms > budget)
    throw BudgetExceeded("enumeration needs " + std::to_string(terms) + " terms, budget is " + std::to_string(budget));
}

// ---------------------------------------------------------------------------
// Exact posteriors
// ---------------------------------------------------------------------------

struct PathPosterior {
  std::size_t atom;
  StatePath path;
  double probability;
};

struct StandardPosterior {
  double evidence = 0.0;
  std::vector<double> likelihood;  // p(y | theta_i)
  std::vector<double> weights;     // p(theta_i | y)
  std::vector<PathPosterior> paths;
};

inline StandardPosterior exact_posterior_standard(const DiscretePrior& prior, const Observations& y,
                                                  std::size_t budget = kDefaultBudget, bool keep_paths = false) {
  if (prior.atoms.empty()) throw ValidationError("prior has no atoms");
  const int k = prior.states();
  const std::size_t len = series_length(y);
  check_budget(prior.atoms.size(), k, len, budget);
  const std::size_t n = prior.atoms.size();
  StandardPosterior out;
  out.likelihood.assign(n, 0.0);
  std::vector<std::vector<PathPosterior>> per_atom(n);
  parallel_for(n, [&](std::size_t i) {
    const auto& theta = prior.atoms[i].params;
    validate(theta);
    check_compatible(theta.emission, y);
    const Eigen::VectorXd init = initial_distribution(theta);
    const Eigen::MatrixXd lik = likelihood_matrix(theta.emission, y);
    CompensatedSum acc;
    for_each_state_path(k, len, [&](const StatePath& s) {
      double p = init(s[0]) * lik(0, s[0]);
      for (std::size_t t = 1; t < len; ++t) p *= theta.q(s[t - 1], s[t]) * lik(static_cast<Eigen::Index>(t), s[t]);
      acc += p;
      if (keep_paths) per_atom[i].push_back({i, s, p});
    });
    out.likelihood[i] = acc.value();
  });
  CompensatedSum ev;
  for (std::size_t i = 0; i < n; ++i) ev += prior.atoms[i].weight * out.likelihood[i];
  out.evidence = ev.value();
  out.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.weights[i] = prior.atoms[i].weight * out.likelihood[i] / out.evidence;
  if (keep_paths) {
    for (std::size_t i = 0; i < n; ++i)
      for (auto& pp : per_atom[i]) {
        pp.probability *= prior.atoms[i].weight / out.evidence;
        out.paths.push_back(std::move(pp));
      }
  }
  return out;
}

struct OrderedPosterior {
  double evidence = 0.0;
  std::vector<double> likelihood;
  std::vector<double> weights;
};

inline OrderedPosterior exact_posterior_ordered(const OrderedPrior& prior, const Observations& y,
                                                std::size_t budget = kDefaultBudget) {
  if (prior.atoms.empty()) throw ValidationError("prior has no atoms");
  const int k = prior.atoms.front().params.states();
  const std::size_t len = series_length(y);
  check_budget(prior.atoms.size(), k, len, budget);
  const std::size_t n = prior.atoms.size();
  OrderedPosterior out;
  out.likelihood.assign(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    const auto& theta = prior.atoms[i].params;
    validate(theta);
    const Eigen::MatrixXd lik = likelihood_matrix(theta.emission, y);
    CompensatedSum acc;
    for_each_ordered_path(k, len, [&](const OrderedPath& p) {
      double v = lik(0, 0);
      for (std::size_t t = 1; t < len; ++t)
        v *= ordered_transition(theta.q, p.z[t - 1], p.m[t - 1], p.z[t]) * lik(static_cast<Eigen::Index>(t), p.z[t]);
      acc += v;
    });
    out.likelihood[i] = acc.value();
  });
  CompensatedSum ev;
  for (std::size_t i = 0; i < n; ++i) ev += prior.atoms[i].weight * out.likelihood[i];
  out.evidence = ev.value();
  out.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.weights[i] = prior.atoms[i].weight * out.likelihood[i] / out.evidence;
  return out;
}

// ---------------------------------------------------------------------------
// Pushforward of (theta, s, sigma) onto (theta_bar, z, m)
// ---------------------------------------------------------------------------

struct JointCell {
  std::size_t atom;  // index into PushforwardJoint::atoms
  OrderedPath path;
  double prior_mass;  // pi(theta) p(s | theta) P(sigma | s, theta), y integrated out
  double data_mass;   // the same times p(y | s, theta)
};

struct PushforwardJoint {
  std::vector<OrderedHmmParams> atoms;  // distinct ordered parameter values
  std::vector<double> base_weight;      // pi aggregated onto the same values
  std::vector<double> prior;            // pushforward prior of theta_bar
  std::vector<double> posterior;        // pushed standard posterior of theta_bar
  double total_mass = 0.0;              // equals the standard evidence
  std::vector<JointCell> table;         // sorted by (atom, path)
};

namespace detail {

inline std::size_t find_or_add(std::vector<OrderedHmmParams>& atoms, const OrderedHmmParams& p) {
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (same_params(atoms[i], p)) return i;
  atoms.push_back(p);
  return atoms.size() - 1;
}

}  // namespace detail

// Distinct (Q, xi) values of the prior, in first-occurrence order, with their
// aggregated weights.
inline OrderedPrior as_ordered_prior(const DiscretePrior& prior) {
  std::vector<OrderedHmmParams> atoms;
  std::vector<double> w;
  for (const auto& a : prior.atoms) {
    const std::size_t j = detail::find_or_add(atoms, as_ordered(a.params));
    if (j == w.size()) w.push_back(0.0);
    w[j] += a.weight;
  }
  OrderedPrior out;
  for (std::size_t j = 0; j < atoms.size(); ++j) out.atoms.push_back({atoms[j], w[j]});
  return out;
}

inline PushforwardJoint pushforward_joint(const DiscretePrior& prior, const Observations& y,
                                          std::size_t budget = kDefaultBudget) {
  if (prior.atoms.empty()) throw ValidationError("prior has no atoms");
  const int k = prior.states();
  if (k > kMaxPermutationStates) throw DimensionMismatch("pushforward enumeration limited to K <= 8");
  const std::size_t len = series_length(y);
  check_budget(prior.atoms.size(), k, len, budget);
  for (const auto& a : prior.atoms) {
    validate(a.params);
    require_strictly_positive(a.params.q);
  }

  PushforwardJoint out;
  const OrderedPrior base = as_ordered_prior(prior);
  for (const auto& a : base.atoms) {
    out.atoms.push_back(a.params);
    out.base_weight.push_back(a.weight);
  }
  // Ordered-atom index of pushforward_params(theta_i, tau), for every i and tau.
  const auto perms = all_permutations(k);
  std::vector<std::map<Permutation, std::size_t>> target(prior.atoms.size());
  for (std::size_t i = 0; i < prior.atoms.size(); ++i)
    for (const auto& tau : perms)
      target[i][tau] = detail::find_or_add(out.atoms, pushforward_params(prior.atoms[i].params, tau));
  out.base_weight.resize(out.atoms.size(), 0.0);

  using Key = std::pair<std::size_t, std::vector<int>>;
  struct Acc {
    CompensatedSum prior;
    CompensatedSum data;
  };
  std::vector<std::map<Key, Acc>> partial(prior.atoms.size());
  parallel_for(prior.atoms.size(), [&](std::size_t i) {
    const auto& theta = prior.atoms[i].params;
    const double w = prior.atoms[i].weight;
    const Eigen::VectorXd init = initial_distribution(theta);
    const Eigen::MatrixXd lik = likelihood_matrix(theta.emission, y);
    FirstExitSolver solver(theta.q);
    auto& cells = partial[i];
    for_each_state_path(k, len, [&](const StatePath& s) {
      double ps = init(s[0]);
      double ly = lik(0, s[0]);
      for (std::size_t t = 1; t < len; ++t) {
        ps *= theta.q(s[t - 1], s[t]);
        ly *= lik(static_cast<Eigen::Index>(t), s[t]);
      }
      const OrderedPath zm = to_ordered_path(s);
      for (const auto& [tau, p_order] : completion_distribution(theta, s, solver)) {
        const double mass = w * ps * p_order;
        auto& cell = cells[Key{target[i].at(tau), zm.z}];
        cell.prior += mass;
        cell.data += mass * ly;
      }
    });
  });

  std::map<Key, Acc> merged;
  for (auto& part : partial)
    for (auto& [key, acc] : part) {
      auto& m = merged[key];
      m.prior += acc.prior;
      m.data += acc.data;
    }
  std::vector<CompensatedSum> prior_by_atom(out.atoms.size()), data_by_atom(out.atoms.size());
  CompensatedSum total;
  for (const auto& [key, acc] : merged) {
    OrderedPath path;
    path.z = key.second;
    path.m.resize(path.z.size());
    int m = 0;
    for (std::size_t t = 0; t < path.z.size(); ++t) path.m[t] = m = std::max(m, path.z[t]);
    out.table.push_back({key.first, std::move(path), acc.prior.value(), acc.data.value()});
    prior_by_atom[key.first] += acc.prior;
    data_by_atom[key.first] += acc.data;
    total += acc.data;
  }
  out.total_mass = total.value();
  for (std::size_t j = 0; j < out.atoms.size(); ++j) {
    out.prior.push_back(prior_by_atom[j].value());
    out.posterior.push_back(out.total_mass > 0.0 ? data_by_atom[j].value() / out.total_mass : 0.0);
  }
  return out;
}

inline OrderedPrior pushforward_prior(const PushforwardJoint& joint) {
  OrderedPrior p;
  for (std::size_t j = 0; j < joint.atoms.size(); ++j) p.atoms.push_back({joint.atoms[j], joint.prior[j]});
  return p;
}

struct ConditionalLawCheck {
  double max_error = 0.0;
  std::size_t cells = 0;  // (atom, t, k, m, l) combinations compared
};

// Compares P(z_{t+1} = l | z_t = k, m_t = m, theta_bar), read off the prior
// masses of the joint table, with the ordered kernel of theta_bar, for every
// reachable conditioning event and every step t.
inline ConditionalLawCheck check_conditional_law(const PushforwardJoint& joint, double min_mass = 0.0) {
  ConditionalLawCheck r;
  if (joint.table.empty()) return r;
  const std::size_t len = joint.table.front().path.size();
  const int k = joint.atoms.front().states();
  for (std::size_t a = 0; a < joint.atoms.size(); ++a) {
    for (std::size_t t = 0; t + 1 < len; ++t) {
      // [from][m][to]
      std::vector<CompensatedSum> num(static_cast<std::size_t>(k * k * k));
      std::vector<CompensatedSum> den(static_cast<std::size_t>(k * k));
      for (const auto& c : joint.table) {
        if (c.atom != a) continue;
        const int from = c.path.z[t], m = c.path.m[t], to = c.path.z[t + 1];
        den[static_cast<std::size_t>(from * k + m)] += c.prior_mass;
        num[static_cast<std::size_t>((from * k + m) * k + to)] += c.prior_mass;
      }
      for (int from = 0; from < k; ++from)
        for (int m = from; m < k; ++m) {
          const double d = den[static_cast<std::size_t>(from * k + m)].value();
          if (!(d > min_mass)) continue;
          for (int to = 0; to < k; ++to) {
            const double freq = num[static_cast<std::size_t>((from * k + m) * k + to)].value() / d;
            const double expected = ordered_transition(joint.atoms[a].q, from, m, to);
            r.max_error = std::max(r.max_error, std::abs(freq - expected));
            ++r.cells;
          }
        }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Equivalence audit
// ---------------------------------------------------------------------------

struct AtomAudit {
  OrderedHmmParams params;
  double prior_weight = 0.0;        // pi on this (Q, xi) value
  double pushforward_weight = 0.0;  // pushforward prior of theta_bar
  double loglik_standard = 0.0;     // with the initial mode of the matching prior atom
  double loglik_ordered = 0.0;
  double ordered_relabel_spread = 0.0;  // max - min of loglik_ordered over relabelings
  double posterior_standard_pushed = 0.0;
  double posterior_ordered_plain = 0.0;
  double posterior_ordered_pushforward = 0.0;
  double y0_mixture = 0.0;    // standard-model density of y_0
  double y0_component = 0.0;  // f(y_0 | xi_bar_1)
};

struct LikelihoodWitness {
  std::size_t atom = 0;
  double loglik_standard = 0.0;
  double loglik_ordered = 0.0;
  double gap = 0.0;
};

struct RelabelWitness {
  std::size_t atom = 0;
  Permutation relabeling;
  double loglik_identity = 0.0;
  double loglik_relabeled = 0.0;
  double spread = 0.0;
};

struct Y0Witness {
  std::size_t atom = 0;
  double mixture = 0.0;
  double component = 0.0;
  double gap = 0.0;
};

struct EquivalenceReport {
  int states = 0;
  std::size_t horizon = 0;
  double evidence_standard = 0.0;
  double evidence_ordered_plain = 0.0;
  double evidence_ordered_pushforward = 0.0;
  double pushforward_mass = 0.0;
  OrderedPrior pushforward_prior;
  double tv_prior = 0.0;
  double tv_posterior_plain = 0.0;
  double tv_posterior_pushforward = 0.0;
  ConditionalLawCheck conditional_law;
  double y0_pushforward_max_error = 0.0;  // |p(y_0 | theta_bar) - f(y_0 | xi_bar_1)| under the pushforward
  LikelihoodWitness likelihood_witness;
  RelabelWitness relabel_witness;
  Y0Witness y0_witness;
  std::vector<AtomAudit> per_atom;
};

inline EquivalenceReport equivalence_audit(const DiscretePrior& prior, const Observations& y,
                                           std::size_t budget = kDefaultBudget) {
  const PriorValidation v = validate_prior(prior);
  if (!v.condition2) throw ConditionViolated("prior has transition matrices with zero entries");
  if (!v.passed()) throw ValidationError("prior fails validation: " + (v.issues.empty() ? "" : v.issues.front()));

  EquivalenceReport r;
  r.states = prior.states();
  r.horizon = series_length(y) - 1;

  const StandardPosterior std_post = exact_posterior_standard(prior, y, budget);
  const PushforwardJoint joint = pushforward_joint(prior, y, budget);
  const OrderedPrior plain{[&] {
    std::vector<OrderedAtom> atoms;
    for (std::size_t j = 0; j < joint.atoms.size(); ++j) atoms.push_back({joint.atoms[j], joint.base_weight[j]});
    return atoms;
  }()};
  r.pushforward_prior = pushforward_prior(joint);
  const OrderedPosterior ord_plain = exact_posterior_ordered(plain, y, budget);
  const OrderedPosterior ord_push = exact_posterior_ordered(r.pushforward_prior, y, budget);

  r.evidence_standard = std_post.evidence;
  r.evidence_ordered_plain = ord_plain.evidence;
  r.evidence_ordered_pushforward = ord_push.evidence;
  r.pushforward_mass = joint.total_mass;
  r.tv_prior = total_variation(joint.base_weight, joint.prior);
  r.tv_posterior_plain = total_variation(joint.posterior, ord_plain.weights);
  r.tv_posterior_pushforward = total_variation(joint.posterior, ord_push.weights);
  r.conditional_law = check_conditional_law(joint);

  const Observations y0 = prefix(y, 1);
  const PushforwardJoint joint0 = pushforward_joint(prior, y0, budget);
  for (std::size_t j = 0; j < joint0.atoms.size(); ++j) {
    if (!(joint0.prior[j] > 0.0)) continue;
    const double law = joint0.posterior[j] * joint0.total_mass / joint0.prior[j];
    r.y0_pushforward_max_error =
        std::max(r.y0_pushforward_max_error, std::abs(law - density(joint0.atoms[j].emission, 0, y0, 0)));
  }

  const auto perms = all_permutations(r.states);
  r.relabel_witness.relabeling = Permutation::identity(r.states);
  for (std::size_t j = 0; j < joint.atoms.size(); ++j) {
    AtomAudit a;
    a.params = joint.atoms[j];
    a.prior_weight = joint.base_weight[j];
    a.pushforward_weight = joint.prior[j];
    // Initial mode of the first standard atom carrying these numbers.
    InitialMode init = StationaryInitial{};
    for (const auto& pa : prior.atoms)
      if (same_params(as_ordered(pa.params), a.params)) {
        init = pa.params.initial;
        break;
      }
    const StandardHmmParams as_std = as_standard(a.params, init);
    a.loglik_standard = loglik_standard(as_std, y);
    a.loglik_ordered = loglik_ordered(a.params, y);
    double lo = a.loglik_ordered, hi = a.loglik_ordered;
    for (const auto& tau : perms) {
      const double l = loglik_ordered(relabel_params(a.params, tau), y);
      lo = std::min(lo, l);
      hi = std::max(hi, l);
      if (std::abs(l - a.loglik_ordered) > r.relabel_witness.spread)
        r.relabel_witness = {j, tau, a.loglik_ordered, l, std::abs(l - a.loglik_ordered)};
    }
    a.ordered_relabel_spread = hi - lo;
    a.posterior_standard_pushed = joint.posterior[j];
    a.posterior_ordered_plain = ord_plain.weights[j];
    a.posterior_ordered_pushforward = ord_push.weights[j];
    a.y0_component = density(a.params.emission, 0, y0, 0);
    a.y0_mixture = std::exp(loglik_standard(as_std, y0));
    const double gap = std::abs(a.loglik_standard - a.loglik_ordered);
    if (j == 0 || gap > r.likelihood_witness.gap) r.likelihood_witness = {j, a.loglik_standard, a.loglik_ordered, gap};
    const double ygap = std::abs(a.y0_mixture - a.y0_component);
    if (j == 0 || ygap > r.y0_witness.gap) r.y0_witness = {j, a.y0_mixture, a.y0_component, ygap};
    r.per_atom.push_back(std::move(a));
  }
  return r;
}

}  // namespace ordhmm
