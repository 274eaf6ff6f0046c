// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "glycopipe/common.hpp"
#include "glycopipe/hyperopt/asha.hpp"
#include "glycopipe/hyperopt/space.hpp"

namespace glycopipe::hyperopt {

using Eigen::MatrixXd;

struct Prediction {
  double mean = 0.0;
  double sd = 0.0;
};

// Surrogates model a quantity to be maximized over the unit-cube encoding.
class Surrogate {
 public:
  virtual ~Surrogate() = default;
  virtual void fit(const std::vector<VectorXd>& x, const VectorXd& y) = 0;
  virtual Prediction predict(const VectorXd& x) const = 0;
};

// Kernel regression with a squared-exponential kernel on standardized
// targets, i.e. the posterior of a zero-mean Gaussian process with fixed
// signal variance 1 and a small noise term. The length scale is picked from
// a fixed grid by marginal likelihood.
class KernelSurrogate : public Surrogate {
 public:
  explicit KernelSurrogate(double noise = 1e-6) : noise_(noise) {}

  void fit(const std::vector<VectorXd>& x, const VectorXd& y) override {
    require(!x.empty() && static_cast<Index>(x.size()) == y.size(), "surrogate needs matching observations");
    x_ = x;
    const auto n = static_cast<double>(y.size());
    y_mean_ = y.mean();
    y_sd_ = std::sqrt((y.array() - y_mean_).square().sum() / n);
    if (!(y_sd_ > 0.0)) y_sd_ = 1.0;
    const VectorXd ys = (y.array() - y_mean_) / y_sd_;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (double ls : {0.03, 0.06, 0.12, 0.25, 0.5, 1.0}) {
      length_ = ls;
      Eigen::LLT<MatrixXd> llt(gram());
      if (llt.info() != Eigen::Success) continue;
      const VectorXd a = llt.solve(ys);
      const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      const double ll = -0.5 * ys.dot(a) - 0.5 * logdet;
      if (ll > best_ll) {
        best_ll = ll;
        best_length_ = ls;
      }
    }
    length_ = best_length_;
    llt_ = Eigen::LLT<MatrixXd>(gram());
    alpha_ = llt_.solve(ys);
  }

  Prediction predict(const VectorXd& x) const override {
    const auto n = static_cast<Index>(x_.size());
    VectorXd k(n);
    for (Index i = 0; i < n; ++i) k(i) = kernel(x, x_[static_cast<std::size_t>(i)]);
    const double mean = k.dot(alpha_);
    const double var = std::max(0.0, 1.0 - k.dot(llt_.solve(k)));
    return {y_mean_ + y_sd_ * mean, y_sd_ * std::sqrt(var)};
  }

  double length_scale() const { return length_; }

 private:
  double kernel(const VectorXd& a, const VectorXd& b) const {
    return std::exp(-0.5 * (a - b).squaredNorm() / (length_ * length_));
  }

  MatrixXd gram() const {
    const auto n = static_cast<Index>(x_.size());
    MatrixXd K(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) K(i, j) = kernel(x_[static_cast<std::size_t>(i)], x_[static_cast<std::size_t>(j)]);
    K.diagonal().array() += noise_;
    return K;
  }

  double noise_;
  double length_ = 0.25, best_length_ = 0.25;
  double y_mean_ = 0.0, y_sd_ = 1.0;
  std::vector<VectorXd> x_;
  Eigen::LLT<MatrixXd> llt_;
  VectorXd alpha_;
};

struct SurrogateState {
  std::vector<std::pair<Config, double>> observations;
  MetricMode mode = MetricMode::max;
  std::size_t candidates = 512;
  std::size_t min_observations = 5;
  double local_sd = 0.05;  // perturbation scale around the incumbent, encoded units
};

inline double expected_improvement(const Prediction& p, double best) {
  if (p.sd <= 0.0) return std::max(0.0, p.mean - best);
  const double z = (p.mean - best) / p.sd;
  return (p.mean - best) * normal_cdf(z) + p.sd * normal_pdf(z);
}

// Candidates are half fresh samples and half perturbations of the incumbent,
// snapped to valid configurations. The proposal maximizes expected
// improvement; if the surrogate reports zero uncertainty everywhere it is the
// candidate with the largest predicted mean.
inline Config smbo_propose(const SurrogateState& state, const SearchSpace& space, Rng& rng,
                           Surrogate* surrogate = nullptr) {
  space.validate();
  if (state.observations.size() < state.min_observations) return sample(space, rng);

  const double sign = state.mode == MetricMode::max ? 1.0 : -1.0;
  std::vector<VectorXd> xs;
  VectorXd ys(static_cast<Index>(state.observations.size()));
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < state.observations.size(); ++i) {
    xs.push_back(encode(space, state.observations[i].first));
    ys(static_cast<Index>(i)) = sign * state.observations[i].second;
    if (ys(static_cast<Index>(i)) > ys(static_cast<Index>(best_i))) best_i = i;
  }
  KernelSurrogate fallback;
  Surrogate& model = surrogate ? *surrogate : fallback;
  model.fit(xs, ys);
  const double best = ys(static_cast<Index>(best_i));

  std::vector<VectorXd> cands;
  cands.reserve(state.candidates);
  for (std::size_t c = 0; c < state.candidates; ++c) {
    if (c % 2 == 0) {
      cands.push_back(encode(space, sample(space, rng)));
      continue;
    }
    VectorXd x = xs[best_i];
    Index k = 0;
    for (const auto& p : space.params) {
      if (p.kind == ParamKind::choice) {
        if (uniform01(rng) < 0.2) {
          x.segment(k, p.encoded_width()).setZero();
          x(k + static_cast<Index>(uniform_index(rng, p.values.size()))) = 1.0;
        }
      } else {
        x(k) += state.local_sd * standard_normal(rng);
      }
      k += p.encoded_width();
    }
    cands.push_back(encode(space, decode(space, x)));
  }

  std::vector<Prediction> preds;
  preds.reserve(cands.size());
  double max_sd = 0.0;
  for (const auto& x : cands) {
    preds.push_back(model.predict(x));
    max_sd = std::max(max_sd, preds.back().sd);
  }
  std::size_t pick = 0;
  double pick_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cands.size(); ++c) {
    const double score = max_sd > 0.0 ? expected_improvement(preds[c], best) : preds[c].mean;
    if (score > pick_score) {
      pick_score = score;
      pick = c;
    }
  }
  return decode(space, cands[pick]);
}

}  // namespace glycopipe::hyperopt
