// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glycopipe/common.hpp"
#include "glycopipe/preprocess/feature_matrix.hpp"

namespace glycopipe::preprocess {

struct RankedFeature {
  std::string name;
  std::size_t column = 0;
  double score = 0.0;
};

// Ordered by descending score; equal scores keep column order.
struct ImportanceRanking {
  std::vector<RankedFeature> entries;

  static ImportanceRanking from_scores(const std::vector<std::string>& names, const std::vector<double>& scores) {
    ImportanceRanking r;
    for (std::size_t j = 0; j < scores.size(); ++j) r.entries.push_back({names[j], j, scores[j]});
    std::stable_sort(r.entries.begin(), r.entries.end(),
                     [](const auto& a, const auto& b) { return a.score > b.score; });
    return r;
  }

  double score_of(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return e.score;
    fail("feature \"", name, "\" not in ranking");
  }
};

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 6;
  std::size_t min_samples_leaf = 5;
  std::uint64_t seed = 0;
};

namespace detail {

inline double gini(double pos, double n) {
  if (n <= 0) return 0.0;
  const double p = pos / n;
  return 2.0 * p * (1.0 - p);
}

class TreeGrower {
 public:
  TreeGrower(const Eigen::MatrixXd& X, const std::vector<int>& y, const ForestConfig& cfg, Rng& rng,
             std::vector<double>& importance)
      : X_(X), y_(y), cfg_(cfg), rng_(rng), importance_(importance) {
    const auto d = static_cast<std::size_t>(X.cols());
    mtry_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
  }

  void grow(std::vector<std::size_t> rows, std::size_t depth) {
    const double n = static_cast<double>(rows.size());
    double pos = 0;
    for (auto r : rows) pos += y_[r];
    if (depth >= cfg_.max_depth || rows.size() < 2 * cfg_.min_samples_leaf || pos == 0 || pos == n) return;

    const std::size_t d = static_cast<std::size_t>(X_.cols());
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    for (std::size_t k = 0; k < mtry_; ++k) std::swap(features[k], features[k + uniform_index(rng_, d - k)]);

    const double parent = n * gini(pos, n);
    double best_gain = 0.0;
    std::size_t best_feature = d;
    double best_threshold = 0.0;
    std::vector<std::size_t> sorted = rows;
    for (std::size_t k = 0; k < mtry_; ++k) {
      const auto f = static_cast<Eigen::Index>(features[k]);
      std::sort(sorted.begin(), sorted.end(), [&](auto a, auto b) {
        const double va = X_(static_cast<Eigen::Index>(a), f), vb = X_(static_cast<Eigen::Index>(b), f);
        return va < vb || (va == vb && a < b);
      });
      double left_pos = 0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        left_pos += y_[sorted[i]];
        const std::size_t nl = i + 1, nr = sorted.size() - nl;
        if (nl < cfg_.min_samples_leaf) continue;
        if (nr < cfg_.min_samples_leaf) break;
        const double v = X_(static_cast<Eigen::Index>(sorted[i]), f);
        const double vnext = X_(static_cast<Eigen::Index>(sorted[i + 1]), f);
        if (v == vnext) continue;
        const double child = static_cast<double>(nl) * gini(left_pos, static_cast<double>(nl)) +
                             static_cast<double>(nr) * gini(pos - left_pos, static_cast<double>(nr));
        const double gain = parent - child;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = features[k];
          best_threshold = 0.5 * (v + vnext);
        }
      }
    }
    if (best_feature == d) return;
    importance_[best_feature] += best_gain;
    std::vector<std::size_t> left, right;
    for (auto r : rows)
      (X_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(best_feature)) <= best_threshold ? left : right)
          .push_back(r);
    grow(std::move(left), depth + 1);
    grow(std::move(right), depth + 1);
  }

 private:
  const Eigen::MatrixXd& X_;
  const std::vector<int>& y_;
  const ForestConfig& cfg_;
  Rng& rng_;
  std::vector<double>& importance_;
  std::size_t mtry_ = 1;
};

}  // namespace detail

// Mean-decrease-in-impurity importance from a bagged forest of depth-limited
// Gini trees with floor(sqrt(d)) candidate features per split. Scores are
// normalized to sum to one; when no tree finds a useful split every feature
// gets 1/d.
inline ImportanceRanking rf_importance(const FeatureMatrix& X, const std::vector<int>& y, const ForestConfig& cfg) {
  require(X.complete(), "random forest requires a complete matrix");
  require(static_cast<Eigen::Index>(y.size()) == X.rows(), "label count does not match rows");
  require(X.cols() >= 1, "random forest requires at least one feature");
  std::size_t pos = 0;
  for (int v : y) {
    require(v == 0 || v == 1, "labels must be binary");
    pos += static_cast<std::size_t>(v);
  }
  require(pos > 0 && pos < y.size(), "labels contain a single class; no split gain is defined");

  const auto d = static_cast<std::size_t>(X.cols());
  std::vector<double> total(d, 0.0);
  const std::size_t n = y.size();
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    Rng rng(derive_seed(cfg.seed, t));
    std::vector<std::size_t> bootstrap(n);
    for (auto& r : bootstrap) r = uniform_index(rng, n);
    std::vector<double> tree_importance(d, 0.0);
    detail::TreeGrower(X.values, y, cfg, rng, tree_importance).grow(std::move(bootstrap), 0);
    for (std::size_t j = 0; j < d; ++j) total[j] += tree_importance[j] / static_cast<double>(n);
  }
  const double sum = std::accumulate(total.begin(), total.end(), 0.0);
  for (auto& s : total) s = sum > 0 ? s / sum : 1.0 / static_cast<double>(d);

  std::vector<std::string> names;
  for (const auto& c : X.columns) names.push_back(c.name);
  return ImportanceRanking::from_scores(names, total);
}

// Column indices of the k best-ranked features, best first.
inline std::vector<std::size_t> select_top_k(const ImportanceRanking& ranking, std::size_t k) {
  require(k <= ranking.entries.size(), "cannot select ", k, " of ", ranking.entries.size(), " features");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(ranking.entries[i].column);
  return out;
}

}  // namespace glycopipe::preprocess
