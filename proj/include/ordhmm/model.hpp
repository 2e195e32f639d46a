#pragma once

#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ordhmm/config.hpp"
#include "ordhmm/emission.hpp"
#include "ordhmm/error.hpp"
#include "ordhmm/forward.hpp"
#include "ordhmm/permutation.hpp"
#include "ordhmm/rng.hpp"

namespace ordhmm {

// Row-stochastic K x K matrix, validated on construction.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;

  explicit TransitionMatrix(Eigen::MatrixXd q) : q_(std::move(q)) {
    if (q_.rows() < 1 || q_.rows() != q_.cols()) throw DimensionMismatch("transition matrix must be square, K >= 1");
    for (Eigen::Index k = 0; k < q_.rows(); ++k) {
      for (Eigen::Index l = 0; l < q_.cols(); ++l)
        if (!(q_(k, l) >= 0.0) || !std::isfinite(q_(k, l)))
          throw ValidationError("transition probabilities must be finite and >= 0");
      if (std::abs(q_.row(k).sum() - 1.0) > kTolerances.validity)
        throw ValidationError("transition matrix rows must sum to 1");
    }
  }

  static TransitionMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const auto k = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd q(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != k) throw DimensionMismatch("transition matrix must be square");
      for (Eigen::Index j = 0; j < k; ++j) q(i, j) = rows[i][j];
    }
    return TransitionMatrix(std::move(q));
  }

  static TransitionMatrix uniform(int k) { return TransitionMatrix(Eigen::MatrixXd::Constant(k, k, 1.0 / k)); }

  [[nodiscard]] int states() const { return static_cast<int>(q_.rows()); }
  [[nodiscard]] double operator()(int k, int l) const { return q_(k, l); }
  [[nodiscard]] const Eigen::MatrixXd& matrix() const { return q_; }

  [[nodiscard]] bool strictly_positive() const { return (q_.array() > 0.0).all(); }

  // q'_{kl} = q_{tau(k) tau(l)}
  [[nodiscard]] TransitionMatrix permuted(const Permutation& tau) const {
    if (tau.size() != states()) throw DimensionMismatch("permutation size differs from state count");
    Eigen::MatrixXd out(q_.rows(), q_.cols());
    for (int k = 0; k < states(); ++k)
      for (int l = 0; l < states(); ++l) out(k, l) = q_(tau(k), tau(l));
    return TransitionMatrix(std::move(out));
  }

  friend bool operator==(const TransitionMatrix& a, const TransitionMatrix& b) {
    return a.q_.rows() == b.q_.rows() && a.q_ == b.q_;
  }

 private:
  Eigen::MatrixXd q_;
};

struct StationaryInitial {
  friend bool operator==(const StationaryInitial&, const StationaryInitial&) = default;
};

struct FixedInitial {
  std::vector<double> probs;
  friend bool operator==(const FixedInitial&, const FixedInitial&) = default;
};

using InitialMode = std::variant<StationaryInitial, FixedInitial>;

struct StandardHmmParams {
  TransitionMatrix q;
  Emission emission;
  InitialMode initial = StationaryInitial{};

  [[nodiscard]] int states() const { return q.states(); }
};

// Hidden state sequence s_0..s_T, 0-based.
using StatePath = std::vector<int>;

inline void validate_probability_vector(const std::vector<double>& p, std::size_t expected, const char* what) {
  if (p.size() != expected) throw DimensionMismatch(std::string(what) + ": wrong length");
  double s = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError(std::string(what) + ": entries must be >= 0");
    s += x;
  }
  if (std::abs(s - 1.0) > kTolerances.validity) throw ValidationError(std::string(what) + ": must sum to 1");
}

inline void validate(const StandardHmmParams& p) {
  validate(p.emission);
  if (num_states(p.emission) != p.states())
    throw DimensionMismatch("emission state count differs from transition matrix size");
  if (const auto* f = std::get_if<FixedInitial>(&p.initial))
    validate_probability_vector(f->probs, static_cast<std::size_t>(p.states()), "fixed initial distribution");
}

inline void validate_path(const StatePath& s, int k) {
  if (s.empty()) throw InvalidPath("state path is empty");
  for (int v : s)
    if (v < 0 || v >= k) throw InvalidPath("state out of range");
}

// Irreducible and aperiodic iff some power Q^n with n <= K^2 is entrywise
// positive. Only the zero pattern matters, so powers are taken on booleans.
inline bool is_ergodic(const TransitionMatrix& q) {
  const int k = q.states();
  using Pattern = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
  const Pattern base = (q.matrix().array() > 0.0).cast<int>();
  Pattern power = base;
  for (int n = 1; n <= k * k; ++n) {
    if ((power.array() > 0).all()) return true;
    power = ((power * base).array() > 0).cast<int>();
  }
  return false;
}

// Solves vartheta Q = vartheta, sum(vartheta) = 1.
inline Eigen::VectorXd stationary_distribution(const TransitionMatrix& q) {
  if (!is_ergodic(q)) throw NotErgodic("transition matrix is not irreducible and aperiodic");
  const int k = q.states();
  Eigen::MatrixXd a = q.matrix().transpose() - Eigen::MatrixXd::Identity(k, k);
  a.row(k - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  b(k - 1) = 1.0;
  Eigen::VectorXd pi = a.fullPivLu().solve(b);
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

// Distribution of s_0 under the configured initial mode.
inline Eigen::VectorXd initial_distribution(const StandardHmmParams& p) {
  if (const auto* f = std::get_if<FixedInitial>(&p.initial))
    return Eigen::Map<const Eigen::VectorXd>(f->probs.data(), static_cast<Eigen::Index>(f->probs.size()));
  return stationary_distribution(p.q);
}

inline std::vector<double> row_of(const Eigen::MatrixXd& m, Eigen::Index r) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(r, c);
  return out;
}

// Draws one observation from state k and appends it to y.
inline void emit(const Emission& e, int k, Rng& rng, Observations& y) {
  if (const auto* c = std::get_if<CategoricalEmission>(&e)) {
    std::get<Symbols>(y).push_back(sample_index(rng, c->probs[k]));
  } else {
    const auto& g = std::get<GaussianEmission>(e);
    std::get<Reals>(y).push_back(sample_normal(rng, g.means[k], std::sqrt(g.variance)));
  }
}

inline Observations empty_series(const Emission& e) {
  if (is_categorical(e)) return Symbols{};
  return Reals{};
}

struct StandardSample {
  StatePath states;
  Observations observations;
};

// Simulates s_{0:T} and y_{0:T}; horizon is T, so T+1 steps are produced.
inline StandardSample simulate_standard(const StandardHmmParams& params, std::size_t horizon, std::uint64_t seed) {
  validate(params);
  const Eigen::VectorXd init = initial_distribution(params);
  Rng rng = make_rng(seed, 1);
  StandardSample out{StatePath{}, empty_series(params.emission)};
  out.states.reserve(horizon + 1);
  std::vector<double> w(init.data(), init.data() + init.size());
  int s = sample_index(rng, w);
  for (std::size_t t = 0; t <= horizon; ++t) {
    if (t > 0) s = sample_index(rng, row_of(params.q.matrix(), s));
    out.states.push_back(s);
    emit(params.emission, s, rng, out.observations);
  }
  return out;
}

inline ForwardPass forward_standard(const StandardHmmParams& params, const Observations& y) {
  validate(params);
  return scaled_forward(initial_distribution(params), params.q.matrix(), likelihood_matrix(params.emission, y));
}

// log sum_s p(s | theta) p(y | s, theta)
inline double loglik_standard(const StandardHmmParams& params, const Observations& y) {
  return forward_standard(params, y).loglik;
}

// sum_k vartheta_k f(y_0 | xi_k), evaluated at the first element of y.
inline double marginal_density_y0_standard(const StandardHmmParams& params, const Observations& y) {
  validate(params);
  if (!std::holds_alternative<StationaryInitial>(params.initial))
    throw ValidationError("marginal density of y_0 is defined for the stationary initial mode");
  const Eigen::VectorXd theta = stationary_distribution(params.q);
  const Observations y0 = prefix(y, 1);
  check_compatible(params.emission, y0);
  double s = 0.0;
  for (int k = 0; k < params.states(); ++k) s += theta(k) * density(params.emission, k, y0, 0);
  return s;
}

// theta_tau: q'_{kl} = q_{tau(k) tau(l)}, xi'_k = xi_{tau(k)}; fixed initial
// vectors are permuted the same way.
inline StandardHmmParams relabel_params(const StandardHmmParams& params, const Permutation& tau) {
  if (tau.size() != params.states()) throw DimensionMismatch("permutation size differs from state count");
  StandardHmmParams out{params.q.permuted(tau), permute(params.emission, tau), params.initial};
  if (auto* f = std::get_if<FixedInitial>(&out.initial)) {
    const auto src = f->probs;
    for (int k = 0; k < tau.size(); ++k) f->probs[k] = src[tau(k)];
  }
  return out;
}

// Relabels a state path so that it describes the same trajectory under theta_tau.
inline StatePath relabel_path(const StatePath& s, const Permutation& tau) {
  const Permutation inv = tau.inverse();
  StatePath out(s.size());
  for (std::size_t t = 0; t < s.size(); ++t) out[t] = inv(s[t]);
  return out;
}

}  // namespace ordhmm
