// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glycopipe/common.hpp"
#include "glycopipe/preprocess/forest.hpp"

namespace glycopipe::explain {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

using PredictFn = std::function<double(const VectorXd&)>;

// Players of the attribution game. Each group is a set of input coordinates
// that are switched between x and the background row together.
using FeatureGroups = std::vector<std::vector<Index>>;

inline FeatureGroups singleton_groups(Index d) {
  FeatureGroups g;
  for (Index j = 0; j < d; ++j) g.push_back({j});
  return g;
}

struct Attribution {
  double base_value = 0.0;  // mean prediction over the background
  double prediction = 0.0;  // f(x)
  VectorXd phi;
  VectorXd std_error;       // zeros in exact mode
  std::size_t samples = 0;  // permutations; 0 in exact mode
};

inline constexpr std::size_t kMaxExactPlayers = 12;

namespace detail {

inline void check_inputs(const VectorXd& x, const MatrixXd& background, const FeatureGroups& groups) {
  require(background.rows() >= 1, "background needs at least one row");
  require(background.cols() == x.size(), "background width ", background.cols(), " does not match input ", x.size());
  require(!groups.empty(), "no features to attribute");
  std::vector<bool> seen(static_cast<std::size_t>(x.size()), false);
  for (const auto& g : groups)
    for (Index j : g) {
      require(j >= 0 && j < x.size(), "feature index ", j, " out of range");
      require(!seen[static_cast<std::size_t>(j)], "feature ", j, " appears in two groups");
      seen[static_cast<std::size_t>(j)] = true;
    }
}

// Interventional value of a coalition given as a membership mask.
inline double coalition_value(const PredictFn& f, const VectorXd& x, const MatrixXd& background,
                              const FeatureGroups& groups, const std::vector<bool>& in) {
  double sum = 0.0;
  VectorXd z;
  for (Index b = 0; b < background.rows(); ++b) {
    z = background.row(b).transpose();
    for (std::size_t g = 0; g < groups.size(); ++g)
      if (in[g])
        for (Index j : groups[g]) z(j) = x(j);
    sum += f(z);
  }
  return sum / static_cast<double>(background.rows());
}

}  // namespace detail

// Enumerates all 2^d coalitions of the d groups.
inline Attribution shapley_exact(const PredictFn& f, const VectorXd& x, const MatrixXd& background,
                                 const FeatureGroups& groups) {
  detail::check_inputs(x, background, groups);
  const std::size_t d = groups.size();
  require(d <= kMaxExactPlayers, "exact Shapley supports at most ", kMaxExactPlayers, " features, got ", d,
          "; use sampling mode");
  const std::size_t masks = std::size_t{1} << d;
  std::vector<double> v(masks);
  std::vector<bool> in(d);
  for (std::size_t s = 0; s < masks; ++s) {
    for (std::size_t g = 0; g < d; ++g) in[g] = (s >> g) & 1U;
    v[s] = detail::coalition_value(f, x, background, groups, in);
  }
  // weight[k] = k! (d-k-1)! / d!
  std::vector<double> weight(d);
  for (std::size_t k = 0; k < d; ++k)
    weight[k] = std::exp(std::lgamma(double(k) + 1) + std::lgamma(double(d - k)) - std::lgamma(double(d) + 1));

  Attribution a;
  a.phi = VectorXd::Zero(static_cast<Index>(d));
  a.std_error = VectorXd::Zero(static_cast<Index>(d));
  for (std::size_t s = 0; s < masks; ++s)
    for (std::size_t i = 0; i < d; ++i)
      if (!((s >> i) & 1U)) {
        const auto k = static_cast<std::size_t>(std::popcount(s));
        a.phi(static_cast<Index>(i)) += weight[k] * (v[s | (std::size_t{1} << i)] - v[s]);
      }
  a.base_value = v[0];
  a.prediction = v[masks - 1];
  return a;
}

// Permutation sampling. Permutation k is drawn from its own generator seeded
// by (seed, k); along it the value of each growing coalition is averaged over
// the whole background.
inline Attribution shapley_sample(const PredictFn& f, const VectorXd& x, const MatrixXd& background,
                                  const FeatureGroups& groups, std::size_t n_permutations, std::uint64_t seed) {
  detail::check_inputs(x, background, groups);
  require(n_permutations >= 1, "need at least one permutation");
  const std::size_t d = groups.size();
  VectorXd sum = VectorXd::Zero(static_cast<Index>(d)), sumsq = VectorXd::Zero(static_cast<Index>(d));
  std::vector<std::size_t> order(d);
  std::vector<bool> in(d);
  const double base = detail::coalition_value(f, x, background, groups, std::vector<bool>(d, false));
  for (std::size_t k = 0; k < n_permutations; ++k) {
    Rng rng = make_rng(derive_seed(seed, k), 0x5a);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = d; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    std::fill(in.begin(), in.end(), false);
    double prev = base;
    for (std::size_t g : order) {
      in[g] = true;
      const double cur = detail::coalition_value(f, x, background, groups, in);
      const double delta = cur - prev;
      sum(static_cast<Index>(g)) += delta;
      sumsq(static_cast<Index>(g)) += delta * delta;
      prev = cur;
    }
  }
  const auto n = static_cast<double>(n_permutations);
  Attribution a;
  a.phi = sum / n;
  a.std_error = VectorXd::Zero(static_cast<Index>(d));
  if (n_permutations > 1)
    for (Index i = 0; i < a.phi.size(); ++i) {
      const double var = std::max(0.0, (sumsq(i) - n * a.phi(i) * a.phi(i)) / (n - 1.0));
      a.std_error(i) = std::sqrt(var / n);
    }
  a.samples = n_permutations;
  a.base_value = base;
  a.prediction = f(x);
  return a;
}

enum class ShapleyMode { exact, sample };

struct AttributionSettings {
  ShapleyMode mode = ShapleyMode::exact;
  std::size_t n_permutations = 1000;
  std::uint64_t seed = 0;
};

// Global ranking by the mean absolute attribution over the rows of X.
inline preprocess::ImportanceRanking mean_abs_attribution(const PredictFn& f, const MatrixXd& X,
                                                          const MatrixXd& background, const FeatureGroups& groups,
                                                          const std::vector<std::string>& names,
                                                          const AttributionSettings& settings = {}) {
  require(X.rows() >= 1, "no rows to attribute");
  require(names.size() == groups.size(), "one name per feature group is required");
  VectorXd total = VectorXd::Zero(static_cast<Index>(groups.size()));
  for (Index i = 0; i < X.rows(); ++i) {
    const VectorXd x = X.row(i).transpose();
    const Attribution a = settings.mode == ShapleyMode::exact
                              ? shapley_exact(f, x, background, groups)
                              : shapley_sample(f, x, background, groups, settings.n_permutations,
                                               derive_seed(settings.seed, static_cast<std::uint64_t>(i)));
    total += a.phi.cwiseAbs();
  }
  total /= static_cast<double>(X.rows());
  return preprocess::ImportanceRanking::from_scores(names, std::vector<double>(total.data(), total.data() + total.size()));
}

// Rows drawn without replacement by a seeded shuffle; all rows if n >= rows.
inline MatrixXd sample_background(const MatrixXd& X, std::size_t n, std::uint64_t seed) {
  std::vector<Index> idx(static_cast<std::size_t>(X.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(seed, 0xb6);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
  idx.resize(std::min(n, idx.size()));
  MatrixXd out(static_cast<Index>(idx.size()), X.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = X.row(idx[k]);
  return out;
}

}  // namespace glycopipe::explain
