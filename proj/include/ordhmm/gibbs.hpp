#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ordhmm/diagnostics.hpp"
#include "ordhmm/emission.hpp"
#include "ordhmm/error.hpp"
#include "ordhmm/exact_bayes.hpp"
#include "ordhmm/forward.hpp"
#include "ordhmm/model.hpp"
#include "ordhmm/ordered.hpp"
#include "ordhmm/relabel.hpp"
#include "ordhmm/rng.hpp"

namespace ordhmm {

// Dirichlet(beta_k) on the symbol probabilities of each state.
struct DirichletEmissionPrior {
  std::vector<std::vector<double>> concentration;  // K x L
};

// Normal(mean, variance) on each state mean; observations have known
// variance obs_variance.
struct NormalEmissionPrior {
  double mean = 0.0;
  double variance = 1.0;
  double obs_variance = 1.0;
};

using EmissionPrior = std::variant<DirichletEmissionPrior, NormalEmissionPrior>;

struct ConjugatePrior {
  Eigen::MatrixXd dirichlet_rows;  // K x K concentrations for Q rows
  EmissionPrior emission;
  // Initial law used by the standard sampler. The ordered sampler ignores it.
  InitialMode initial = StationaryInitial{};

  [[nodiscard]] int states() const { return static_cast<int>(dirichlet_rows.rows()); }
};

inline ConjugatePrior make_uniform_fixed_prior(ConjugatePrior p) {
  p.initial = FixedInitial{std::vector<double>(static_cast<std::size_t>(p.states()), 1.0 / p.states())};
  return p;
}

inline void validate(const ConjugatePrior& p) {
  const int k = p.states();
  if (k < 1 || p.dirichlet_rows.cols() != k) throw DimensionMismatch("dirichlet_rows must be K x K");
  if (!(p.dirichlet_rows.array() > 0.0).all()) throw ValidationError("Dirichlet concentrations must be positive");
  if (const auto* d = std::get_if<DirichletEmissionPrior>(&p.emission)) {
    if (static_cast<int>(d->concentration.size()) != k) throw DimensionMismatch("emission prior needs K rows");
    const std::size_t l = d->concentration.front().size();
    if (l < 1) throw ValidationError("emission prior needs at least one symbol");
    for (const auto& row : d->concentration) {
      if (row.size() != l) throw DimensionMismatch("emission prior rows must share the symbol count");
      for (double a : row)
        if (!(a > 0.0)) throw ValidationError("Dirichlet concentrations must be positive");
    }
  } else {
    const auto& n = std::get<NormalEmissionPrior>(p.emission);
    if (!(n.variance > 0.0) || !(n.obs_variance > 0.0)) throw ValidationError("normal prior variances must be positive");
  }
  if (const auto* f = std::get_if<FixedInitial>(&p.initial))
    validate_probability_vector(f->probs, static_cast<std::size_t>(k), "fixed initial distribution");
}

// Invariance of the prior under relabeling: alpha_{tau(k) tau(l)} = alpha_kl
// for every tau, and identical emission priors.
inline bool is_exchangeable(const ConjugatePrior& p) {
  const int k = p.states();
  if (k > kMaxPermutationStates) return false;
  for (const auto& tau : all_permutations(k))
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        if (p.dirichlet_rows(tau(a), tau(b)) != p.dirichlet_rows(a, b)) return false;
  if (const auto* d = std::get_if<DirichletEmissionPrior>(&p.emission))
    for (const auto& row : d->concentration)
      if (row != d->concentration.front()) return false;
  if (const auto* f = std::get_if<FixedInitial>(&p.initial))
    for (double x : f->probs)
      if (x != f->probs.front()) return false;
  return true;
}

inline TransitionMatrix draw_transition(const Eigen::MatrixXd& alpha, Rng& rng) {
  const auto k = alpha.rows();
  Eigen::MatrixXd q(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto row = sample_dirichlet(rng, row_of(alpha, r));
    for (Eigen::Index c = 0; c < k; ++c) q(r, c) = row[static_cast<std::size_t>(c)];
    q.row(r) /= q.row(r).sum();
  }
  return TransitionMatrix(std::move(q));
}

// Conjugate draw of the emission parameters given state assignments `labels`
// (labels[t] is the state of y_t). An empty label set gives a prior draw.
inline Emission draw_emission(const EmissionPrior& prior, int k, const Observations& y, const std::vector<int>& labels,
                              Rng& rng) {
  if (const auto* d = std::get_if<DirichletEmissionPrior>(&prior)) {
    std::vector<std::vector<double>> post = d->concentration;
    if (!labels.empty()) {
      const auto& s = std::get<Symbols>(y);
      for (std::size_t t = 0; t < labels.size(); ++t) post[static_cast<std::size_t>(labels[t])][static_cast<std::size_t>(s[t])] += 1.0;
    }
    CategoricalEmission e;
    for (int j = 0; j < k; ++j) {
      auto p = sample_dirichlet(rng, post[static_cast<std::size_t>(j)]);
      double tot = 0.0;
      for (double x : p) tot += x;
      for (double& x : p) x /= tot;
      e.probs.push_back(std::move(p));
    }
    return e;
  }
  const auto& n = std::get<NormalEmissionPrior>(prior);
  std::vector<double> sum(static_cast<std::size_t>(k), 0.0), count(static_cast<std::size_t>(k), 0.0);
  if (!labels.empty()) {
    const auto& r = std::get<Reals>(y);
    for (std::size_t t = 0; t < labels.size(); ++t) {
      sum[static_cast<std::size_t>(labels[t])] += r[t];
      count[static_cast<std::size_t>(labels[t])] += 1.0;
    }
  }
  GaussianEmission e{.means = {}, .variance = n.obs_variance};
  for (int j = 0; j < k; ++j) {
    const double precision = 1.0 / n.variance + count[static_cast<std::size_t>(j)] / n.obs_variance;
    const double mean = (n.mean / n.variance + sum[static_cast<std::size_t>(j)] / n.obs_variance) / precision;
    e.means.push_back(sample_normal(rng, mean, std::sqrt(1.0 / precision)));
  }
  return e;
}

inline StandardHmmParams draw_standard_from_prior(const ConjugatePrior& prior, Rng& rng) {
  TransitionMatrix q = draw_transition(prior.dirichlet_rows, rng);
  Emission e = draw_emission(prior.emission, prior.states(), Reals{}, {}, rng);
  return StandardHmmParams{std::move(q), std::move(e), prior.initial};
}

inline OrderedHmmParams draw_ordered_from_prior(const ConjugatePrior& prior, Rng& rng) {
  TransitionMatrix q = draw_transition(prior.dirichlet_rows, rng);
  Emission e = draw_emission(prior.emission, prior.states(), Reals{}, {}, rng);
  return OrderedHmmParams{std::move(q), std::move(e)};
}

// Exact draw from p(s_{0:T} | y, theta).
inline StatePath ffbs_standard(const StandardHmmParams& params, const Observations& y, Rng& rng) {
  const ForwardPass pass = forward_standard(params, y);
  return backward_sample(pass, params.q.matrix(), rng);
}

inline StatePath ffbs_standard(const StandardHmmParams& params, const Observations& y, std::uint64_t seed) {
  Rng rng = make_rng(seed, 3);
  return ffbs_standard(params, y, rng);
}

// Exact draw from p(z_{0:T}, m_{0:T} | y, theta_bar), via the expanded chain.
inline OrderedPath ffbs_ordered(const OrderedHmmParams& params, const Observations& y, Rng& rng) {
  const ExpandedChain chain = build_expanded_chain(params);
  const ForwardPass pass = forward_ordered(params, chain, y);
  return to_pairs(chain, backward_sample(pass, chain.kernel, rng));
}

inline OrderedPath ffbs_ordered(const OrderedHmmParams& params, const Observations& y, std::uint64_t seed) {
  Rng rng = make_rng(seed, 4);
  return ffbs_ordered(params, y, rng);
}

enum class Coordinates { Standard, Ordered };

enum class OrderedRowUpdate {
  Augmented,   // latent destination column at new-state events, exact Dirichlet
  Metropolis,  // independence proposal from the known-destination counts
};

struct GibbsConfig {
  std::size_t iterations = 1000;
  std::size_t burnin = 0;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  OrderedRowUpdate row_update = OrderedRowUpdate::Augmented;
};

inline void validate(const GibbsConfig& c) {
  if (c.thin == 0) throw ConfigError("thin must be positive");
  if (c.burnin > c.iterations) throw ConfigError("burn-in exceeds the number of iterations");
}

struct GibbsDraw {
  std::size_t iteration = 0;
  TransitionMatrix q;
  Emission emission;
  std::vector<int> path;  // s (standard) or z (ordered)
  std::vector<int> m;     // ordered coordinates only
  double log_complete = 0.0;
};

struct GibbsTrace {
  Coordinates coordinates = Coordinates::Standard;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  std::size_t burnin = 0;
  std::size_t thin = 1;
  // draws[0] is the initialization; the rest are retained post-burn-in draws.
  std::vector<GibbsDraw> draws;
  std::size_t mh_proposals = 0;
  std::size_t mh_accepts = 0;
};

// Transition counts n_kl along a standard path.
inline Eigen::MatrixXd transition_counts(const StatePath& s, int k) {
  Eigen::MatrixXd n = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t t = 1; t < s.size(); ++t) n(s[t - 1], s[t]) += 1.0;
  return n;
}

// Gibbs sampler for the standard model: FFBS for s, conjugate Dirichlet rows
// for Q (with an MH correction for the stationary initial factor), conjugate
// emission updates.
class StandardGibbs {
 public:
  StandardGibbs(ConjugatePrior prior, Observations y, std::uint64_t seed)
      : prior_(std::move(prior)), y_(std::move(y)), rng_(make_rng(seed, 10)) {
    validate(prior_);
    params_ = draw_standard_from_prior(prior_, rng_);
    check_compatible(params_.emission, y_);
    path_ = ffbs_standard(params_, y_, rng_);
  }

  void sweep() {
    path_ = ffbs_standard(params_, y_, rng_);
    update_parameters();
  }

  // Parameter half of the sweep, given the current path.
  void update_parameters() {
    const int k = prior_.states();
    const Eigen::MatrixXd alpha = prior_.dirichlet_rows + transition_counts(path_, k);
    TransitionMatrix proposal = draw_transition(alpha, rng_);
    if (std::holds_alternative<StationaryInitial>(prior_.initial)) {
      ++proposals_;
      const int s0 = path_.front();
      const double ratio =
          is_ergodic(proposal) ? stationary_distribution(proposal)(s0) / stationary_distribution(params_.q)(s0) : 0.0;
      if (uniform01(rng_) < ratio) {
        params_.q = std::move(proposal);
        ++accepts_;
      }
    } else {
      params_.q = std::move(proposal);
    }
    params_.emission = draw_emission(prior_.emission, k, y_, path_, rng_);
  }

  void set_observations(Observations y) {
    check_compatible(params_.emission, y);
    y_ = std::move(y);
  }
  void set_path(StatePath s) { path_ = std::move(s); }

  [[nodiscard]] const StandardHmmParams& params() const { return params_; }
  [[nodiscard]] const StatePath& path() const { return path_; }
  [[nodiscard]] const Observations& observations() const { return y_; }
  [[nodiscard]] std::size_t mh_proposals() const { return proposals_; }
  [[nodiscard]] std::size_t mh_accepts() const { return accepts_; }
  Rng& rng() { return rng_; }

  [[nodiscard]] GibbsDraw draw(std::size_t iteration) const {
    return GibbsDraw{iteration, params_.q, params_.emission, path_, {}, complete_loglik(params_, path_, y_)};
  }

 private:
  ConjugatePrior prior_;
  Observations y_;
  Rng rng_;
  StandardHmmParams params_;
  StatePath path_;
  std::size_t proposals_ = 0;
  std::size_t accepts_ = 0;
};

// Gibbs sampler for the ordered model. FFBS runs on the expanded (z, m)
// chain. A jump to a new label from z_t = k with m_t = m only identifies the
// aggregate sum_{i > m} q_bar_ki; the augmented update draws the destination
// column c with probability q_bar_kc / sum_{i > m} q_bar_ki, after which every
// row is conditionally Dirichlet.
class OrderedGibbs {
 public:
  OrderedGibbs(ConjugatePrior prior, Observations y, std::uint64_t seed,
               OrderedRowUpdate update = OrderedRowUpdate::Augmented)
      : prior_(std::move(prior)), y_(std::move(y)), rng_(make_rng(seed, 20)), update_(update) {
    validate(prior_);
    params_ = draw_ordered_from_prior(prior_, rng_);
    check_compatible(params_.emission, y_);
    path_ = ffbs_ordered(params_, y_, rng_);
  }

  void sweep() {
    path_ = ffbs_ordered(params_, y_, rng_);
    update_parameters();
  }

  void update_parameters() {
    const int k = prior_.states();
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k, k);
    // (row, m) of every new-label event
    std::vector<std::pair<int, int>> events;
    for (std::size_t t = 1; t < path_.size(); ++t) {
      const int from = path_.z[t - 1], m = path_.m[t - 1], to = path_.z[t];
      if (to <= m) {
        counts(from, to) += 1.0;
      } else if (update_ == OrderedRowUpdate::Augmented) {
        counts(from, augment_column(from, m)) += 1.0;
      } else {
        events.emplace_back(from, m);
      }
    }
    const Eigen::MatrixXd alpha = prior_.dirichlet_rows + counts;
    TransitionMatrix proposal = draw_transition(alpha, rng_);
    if (update_ == OrderedRowUpdate::Augmented) {
      params_.q = std::move(proposal);
    } else {
      Eigen::MatrixXd q = params_.q.matrix();
      for (int r = 0; r < k; ++r) {
        double log_ratio = 0.0;
        bool any = false;
        for (const auto& [row, m] : events) {
          if (row != r) continue;
          any = true;
          log_ratio += std::log(ordered_transition(proposal, r, m, m + 1)) -
                       std::log(ordered_transition(params_.q, r, m, m + 1));
        }
        if (any) ++proposals_;
        if (!any || std::log(uniform01(rng_)) < log_ratio) {
          q.row(r) = proposal.matrix().row(r);
          if (any) ++accepts_;
        }
      }
      params_.q = TransitionMatrix(std::move(q));
    }
    params_.emission = draw_emission(prior_.emission, k, y_, path_.z, rng_);
  }

  // Latent destination column for a new-label event from label `from` with
  // labels 0..m already seen.
  int augment_column(int from, int m) {
    const int k = prior_.states();
    std::vector<double> w(static_cast<std::size_t>(k), 0.0);
    for (int c = m + 1; c < k; ++c) w[static_cast<std::size_t>(c)] = params_.q(from, c);
    return sample_index(rng_, w);
  }

  void set_observations(Observations y) {
    check_compatible(params_.emission, y);
    y_ = std::move(y);
  }

  [[nodiscard]] const OrderedHmmParams& params() const { return params_; }
  [[nodiscard]] const OrderedPath& path() const { return path_; }
  [[nodiscard]] std::size_t mh_proposals() const { return proposals_; }
  [[nodiscard]] std::size_t mh_accepts() const { return accepts_; }
  Rng& rng() { return rng_; }

  [[nodiscard]] GibbsDraw draw(std::size_t iteration) const {
    return GibbsDraw{iteration, params_.q, params_.emission, path_.z, path_.m, complete_loglik(params_, path_, y_)};
  }

 private:
  ConjugatePrior prior_;
  Observations y_;
  Rng rng_;
  OrderedRowUpdate update_;
  OrderedHmmParams params_;
  OrderedPath path_;
  std::size_t proposals_ = 0;
  std::size_t accepts_ = 0;
};

namespace detail {

template <typename Sampler>
GibbsTrace run_chain(Sampler& sampler, const GibbsConfig& config, Coordinates coords) {
  GibbsTrace trace;
  trace.coordinates = coords;
  trace.seed = config.seed;
  trace.iterations = config.iterations;
  trace.burnin = config.burnin;
  trace.thin = config.thin;
  trace.draws.push_back(sampler.draw(0));
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    sampler.sweep();
    if (it > config.burnin && (it - config.burnin) % config.thin == 0) trace.draws.push_back(sampler.draw(it));
  }
  trace.mh_proposals = sampler.mh_proposals();
  trace.mh_accepts = sampler.mh_accepts();
  return trace;
}

}  // namespace detail

inline GibbsTrace gibbs_standard(const ConjugatePrior& prior, const Observations& y, const GibbsConfig& config) {
  validate(config);
  StandardGibbs sampler(prior, y, config.seed);
  return detail::run_chain(sampler, config, Coordinates::Standard);
}

inline GibbsTrace gibbs_ordered(const ConjugatePrior& prior, const Observations& y, const GibbsConfig& config) {
  validate(config);
  OrderedGibbs sampler(prior, y, config.seed, config.row_update);
  return detail::run_chain(sampler, config, Coordinates::Ordered);
}

// Maps every standard draw (theta, s) to ordered coordinates (theta_bar, z, m).
// When s does not visit every state, the rest of the appearance order is drawn
// from its exact conditional law given the path.
inline GibbsTrace relabel_trace(const GibbsTrace& trace, std::uint64_t seed) {
  if (trace.coordinates != Coordinates::Standard) throw Error("relabel_trace expects a standard-model trace");
  GibbsTrace out = trace;
  out.coordinates = Coordinates::Ordered;
  Rng rng = make_rng(seed, 30);
  for (auto& d : out.draws) {
    const int k = d.q.states();
    const StandardHmmParams theta{d.q, d.emission,
                                  FixedInitial{std::vector<double>(static_cast<std::size_t>(k), 1.0 / k)}};
    const Permutation sigma = sample_completion(theta, d.path, rng);
    const OrderedHmmParams bar = pushforward_params(theta, sigma);
    const OrderedPath zm = to_ordered_path(d.path);
    d.q = bar.q;
    d.emission = bar.emission;
    d.path = zm.z;
    d.m = zm.m;
  }
  return out;
}

// Flattened parameter columns with stable names: q_k_l, xi_k_j (1-based).
inline std::vector<std::pair<std::string, std::vector<double>>> parameter_columns(const GibbsTrace& trace,
                                                                                   bool include_init = true) {
  std::vector<std::pair<std::string, std::vector<double>>> cols;
  if (trace.draws.empty()) return cols;
  const auto& first = trace.draws.front();
  const int k = first.q.states();
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) cols.push_back({"q_" + std::to_string(a + 1) + "_" + std::to_string(b + 1), {}});
  const int width = is_categorical(first.emission) ? std::get<CategoricalEmission>(first.emission).symbols() : 1;
  for (int a = 0; a < k; ++a)
    for (int j = 0; j < width; ++j) cols.push_back({"xi_" + std::to_string(a + 1) + "_" + std::to_string(j + 1), {}});
  for (std::size_t i = include_init ? 0 : 1; i < trace.draws.size(); ++i) {
    const auto& d = trace.draws[i];
    std::size_t c = 0;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) cols[c++].second.push_back(d.q(a, b));
    for (int a = 0; a < k; ++a)
      for (int j = 0; j < width; ++j) {
        const double v = is_categorical(d.emission) ? std::get<CategoricalEmission>(d.emission).probs[a][j]
                                                    : std::get<GaussianEmission>(d.emission).means[a];
        cols[c++].second.push_back(v);
      }
  }
  return cols;
}

struct TraceSummary {
  std::vector<std::pair<std::string, ChainSummary>> columns;
  ChainSummary log_complete;
};

// Summaries over the retained draws, excluding the initialization.
inline TraceSummary summarize(const GibbsTrace& trace) {
  TraceSummary s;
  for (const auto& [name, values] : parameter_columns(trace, false)) s.columns.push_back({name, batch_means(values)});
  std::vector<double> lc;
  for (std::size_t i = 1; i < trace.draws.size(); ++i) lc.push_back(trace.draws[i].log_complete);
  s.log_complete = batch_means(lc);
  return s;
}

}  // namespace ordhmm
