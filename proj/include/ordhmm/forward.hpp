#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "ordhmm/error.hpp"
#include "ordhmm/rng.hpp"

namespace ordhmm {

// Output of the normalized forward recursion. Row t of `filtered` is
// p(state_t | y_{0:t}); loglik is the sum of the per-step log normalizers.
struct ForwardPass {
  double loglik = 0.0;
  Eigen::MatrixXd filtered;
  std::vector<double> log_normalizers;
  // False once some normalizer hit zero; rows from that point on are zero.
  bool finite = true;
};

// Scaled forward recursion shared by the standard and the ordered model.
//   initial:   distribution of the hidden state at t = 0 (size n)
//   kernel:    n x n row-stochastic transition matrix
//   emission:  (T+1) x n matrix of observation densities
inline ForwardPass scaled_forward(const Eigen::VectorXd& initial, const Eigen::MatrixXd& kernel,
                                  const Eigen::MatrixXd& emission) {
  const Eigen::Index n = initial.size();
  if (kernel.rows() != n || kernel.cols() != n || emission.cols() != n)
    throw DimensionMismatch("scaled_forward: inconsistent dimensions");
  const Eigen::Index steps = emission.rows();
  ForwardPass out;
  out.filtered = Eigen::MatrixXd::Zero(steps, n);
  out.log_normalizers.reserve(static_cast<std::size_t>(steps));

  Eigen::RowVectorXd alpha = initial.transpose().cwiseProduct(emission.row(0));
  for (Eigen::Index t = 0;; ++t) {
    const double c = alpha.sum();
    if (!(c > 0.0)) {
      out.finite = false;
      out.loglik = -std::numeric_limits<double>::infinity();
      return out;
    }
    alpha /= c;
    out.filtered.row(t) = alpha;
    out.log_normalizers.push_back(std::log(c));
    out.loglik += std::log(c);
    if (t + 1 == steps) break;
    alpha = (alpha * kernel).cwiseProduct(emission.row(t + 1));
  }
  return out;
}

// Backward sampling pass of FFBS: an exact draw of the hidden path given the
// forward filter.
inline std::vector<int> backward_sample(const ForwardPass& pass, const Eigen::MatrixXd& kernel, Rng& rng) {
  if (!pass.finite) throw Error("backward_sample: observations have zero likelihood");
  const auto steps = pass.filtered.rows();
  const auto n = pass.filtered.cols();
  std::vector<int> path(static_cast<std::size_t>(steps));
  std::vector<double> w(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) w[i] = pass.filtered(steps - 1, i);
  path.back() = sample_index(rng, w);
  for (Eigen::Index t = steps - 2; t >= 0; --t) {
    const int next = path[static_cast<std::size_t>(t + 1)];
    for (Eigen::Index i = 0; i < n; ++i) w[i] = pass.filtered(t, i) * kernel(i, next);
    path[static_cast<std::size_t>(t)] = sample_index(rng, w);
  }
  return path;
}

}  // namespace ordhmm
