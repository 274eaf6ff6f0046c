// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "glycopipe/common.hpp"
#include "glycopipe/model/fusion.hpp"

namespace glycopipe::model {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct EvalMetrics {
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double auc = 0.5;
  ConfusionCounts counts;
};

// Mann-Whitney statistic with tied pairs counted as one half. Returns 0.5
// when either class is absent.
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), "score and label counts differ");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) {
        rank_sum_pos += mid_rank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return 0.5;
  const double np = static_cast<double>(n_pos);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

// Scores at or above the threshold are predicted positive.
inline EvalMetrics metrics_from_scores(std::span<const double> scores, std::span<const int> labels,
                                       double threshold = 0.5) {
  EvalMetrics m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i] == 1)
      (pred ? m.counts.tp : m.counts.fn)++;
    else
      (pred ? m.counts.fp : m.counts.tn)++;
  }
  auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  m.accuracy = ratio(m.counts.tp + m.counts.tn, scores.size());
  m.sensitivity = ratio(m.counts.tp, m.counts.tp + m.counts.fn);
  m.specificity = ratio(m.counts.tn, m.counts.tn + m.counts.fp);
  m.auc = roc_auc(scores, labels);
  return m;
}

inline std::vector<double> predict_all(const FusionModel& model, const Dataset& data) {
  std::vector<double> p;
  p.reserve(data.size());
  for (const auto& ex : data) p.push_back(predict(model, ex));
  return p;
}

inline std::vector<int> labels_of(const Dataset& data) {
  std::vector<int> y;
  y.reserve(data.size());
  for (const auto& ex : data) y.push_back(ex.label);
  return y;
}

inline EvalMetrics evaluate(const FusionModel& model, const Dataset& data, double threshold = 0.5) {
  const auto scores = predict_all(model, data);
  const auto labels = labels_of(data);
  return metrics_from_scores(scores, labels, threshold);
}

}  // namespace glycopipe::model
