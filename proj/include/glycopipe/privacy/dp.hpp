// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "glycopipe/common.hpp"

namespace glycopipe::privacy {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct DpParams {
  double epsilon = 0.1;
  double delta = 0.0;
  double clip_norm = 1.0;        // C
  double noise_multiplier = 0.1; // sigma, dimensionless
  std::size_t lot_size = 1;      // B

  void validate() const {
    require(epsilon > 0.0, "epsilon must be > 0");
    require(delta >= 0.0 && delta < 1.0, "delta must lie in [0, 1)");
    require(clip_norm > 0.0, "clip_norm must be > 0");
    require(noise_multiplier >= 0.0, "noise_multiplier must be >= 0");
  }
};

// Rows of per_example are individual gradients. Each row is rescaled to L2
// norm at most C, the rows are averaged, and N(0, (sigma*C/B)^2) noise is
// added per coordinate, where B is the number of rows.
inline VectorXd dpsgd_sanitize(const MatrixXd& per_example, double clip_norm, double noise_multiplier, Rng& rng) {
  require(per_example.rows() >= 1, "DP-SGD needs at least one example gradient");
  require(clip_norm > 0.0, "clip_norm must be > 0");
  require(noise_multiplier >= 0.0, "noise_multiplier must be >= 0");
  require(per_example.allFinite(), "non-finite per-example gradient");
  const auto B = static_cast<double>(per_example.rows());
  VectorXd sum = VectorXd::Zero(per_example.cols());
  for (Index i = 0; i < per_example.rows(); ++i) {
    const double norm = per_example.row(i).norm();
    const double factor = norm > clip_norm ? clip_norm / norm : 1.0;
    sum += factor * per_example.row(i).transpose();
  }
  VectorXd out = sum / B;
  if (noise_multiplier > 0.0) {
    const double sd = noise_multiplier * clip_norm / B;
    for (Index k = 0; k < out.size(); ++k) out(k) += sd * standard_normal(rng);
  }
  return out;
}

inline VectorXd dpsgd_sanitize(const MatrixXd& per_example, const DpParams& p, Rng& rng) {
  p.validate();
  return dpsgd_sanitize(per_example, p.clip_norm, p.noise_multiplier, rng);
}

struct LinearModel {
  VectorXd weights;
  double intercept = 0.0;

  double decision(const VectorXd& x) const { return weights.dot(x) + intercept; }
  int predict(const VectorXd& x) const { return decision(x) >= 0.0 ? 1 : 0; }

  double accuracy(const MatrixXd& X, const std::vector<int>& y) const {
    std::size_t ok = 0;
    for (Index i = 0; i < X.rows(); ++i) ok += predict(X.row(i).transpose()) == y[static_cast<std::size_t>(i)];
    return X.rows() ? static_cast<double>(ok) / static_cast<double>(X.rows()) : 0.0;
  }
};

namespace detail {

inline void check_binary(const std::vector<int>& y, Index n) {
  require(static_cast<Index>(y.size()) == n, "label count does not match rows");
  std::size_t pos = 0;
  for (int v : y) {
    require(v == 0 || v == 1, "labels must be binary");
    pos += static_cast<std::size_t>(v);
  }
  require(pos > 0 && pos < y.size(), "labels contain a single class");
}

}  // namespace detail

// Minimizes (1/n) sum log(1 + exp(-s_i w.x_i)) + (lambda/2)|w|^2 with
// s_i = 2y_i - 1, by Newton's method (the objective is strongly convex).
// No intercept term.
inline VectorXd fit_l2_logistic(const MatrixXd& X, const std::vector<int>& y, double lambda) {
  detail::check_binary(y, X.rows());
  require(lambda > 0.0, "lambda must be > 0");
  const Index n = X.rows(), d = X.cols();
  VectorXd w = VectorXd::Zero(d);
  for (int iter = 0; iter < 100; ++iter) {
    VectorXd grad = lambda * w;
    MatrixXd hess = lambda * MatrixXd::Identity(d, d);
    for (Index i = 0; i < n; ++i) {
      const double s = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
      const double m = s * X.row(i).dot(w);
      const double p = sigmoid(-m);  // derivative weight
      grad -= (s * p / static_cast<double>(n)) * X.row(i).transpose();
      hess.noalias() += (p * (1.0 - p) / static_cast<double>(n)) * X.row(i).transpose() * X.row(i);
    }
    const VectorXd step = hess.ldlt().solve(grad);
    w -= step;
    if (grad.norm() < 1e-13 || step.norm() < 1e-14) break;
  }
  return w;
}

inline LinearModel fit_logistic_regression(const MatrixXd& X, const std::vector<int>& y, double lambda) {
  return {fit_l2_logistic(X, y, lambda), 0.0};
}

// Noise with density proportional to exp(-beta |b|), beta = epsilon*n*lambda/2:
// uniform direction times a Gamma(d, 1/beta) radius.
inline VectorXd sample_output_noise(Index d, double epsilon, std::size_t n, double lambda, Rng& rng) {
  require(d >= 1, "dimension must be >= 1");
  VectorXd dir(d);
  double norm = 0.0;
  while (norm == 0.0) {
    for (Index k = 0; k < d; ++k) dir(k) = standard_normal(rng);
    norm = dir.norm();
  }
  dir /= norm;
  const double scale = 2.0 / (epsilon * static_cast<double>(n) * lambda);
  double radius = 0.0;
  for (Index k = 0; k < d; ++k) {
    double u = uniform01(rng);
    if (u <= 0.0) u = 0x1.0p-53;
    radius -= std::log(u);
  }
  return dir * (radius * scale);
}

// Output perturbation: rows are divided by data_norm (so every row has norm
// <= 1 and the minimizer has L2 sensitivity 2/(n*lambda)), the regularized
// logistic regression is solved exactly, noise is added, and the weights are
// mapped back to the input units.
inline LinearModel dp_logistic_regression(const MatrixXd& X, const std::vector<int>& y, double epsilon,
                                          double data_norm, double lambda, std::uint64_t seed) {
  require(data_norm > 0.0, "data_norm must be > 0");
  require(epsilon > 0.0, "epsilon must be > 0");
  detail::check_binary(y, X.rows());
  for (Index i = 0; i < X.rows(); ++i)
    require(X.row(i).norm() <= data_norm * (1.0 + 1e-12), "row ", i, " has norm ", X.row(i).norm(),
            " above data_norm ", data_norm, "; clip rows first");
  const MatrixXd scaled = X / data_norm;
  VectorXd w = fit_l2_logistic(scaled, y, lambda);
  Rng rng = make_rng(seed, 0xd9);
  w += sample_output_noise(X.cols(), epsilon, static_cast<std::size_t>(X.rows()), lambda, rng);
  return {w / data_norm, 0.0};
}

// Rescales each row to norm at most data_norm.
inline MatrixXd clip_rows(const MatrixXd& X, double data_norm) {
  MatrixXd out = X;
  for (Index i = 0; i < X.rows(); ++i) {
    const double n = X.row(i).norm();
    if (n > data_norm) out.row(i) *= data_norm / n;
  }
  return out;
}

// Sequential composition: totals are plain sums. A spend that would push
// either total over its cap is rejected and leaves the ledger unchanged.
class PrivacyLedger {
 public:
  PrivacyLedger(double epsilon_cap, double delta_cap = 0.0) : epsilon_cap_(epsilon_cap), delta_cap_(delta_cap) {
    require(epsilon_cap >= 0.0 && delta_cap >= 0.0, "caps must be nonnegative");
  }

  bool spend(double epsilon, double delta = 0.0) {
    require(epsilon >= 0.0 && delta >= 0.0, "spends must be nonnegative");
    const auto [e, d] = total();
    // The small slack absorbs rounding in the running sum, e.g. 0.05 + 0.05.
    if (e + epsilon > epsilon_cap_ * (1.0 + 1e-12) || d + delta > delta_cap_ * (1.0 + 1e-12) + 1e-300) return false;
    spends_.emplace_back(epsilon, delta);
    return true;
  }

  std::pair<double, double> total() const {
    double e = 0.0, d = 0.0;
    for (const auto& [ei, di] : spends_) {
      e += ei;
      d += di;
    }
    return {e, d};
  }

  const std::vector<std::pair<double, double>>& spends() const { return spends_; }
  double epsilon_cap() const { return epsilon_cap_; }
  double delta_cap() const { return delta_cap_; }

 private:
  double epsilon_cap_;
  double delta_cap_;
  std::vector<std::pair<double, double>> spends_;
};

}  // namespace glycopipe::privacy
