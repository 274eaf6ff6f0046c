// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glycopipe/common.hpp"

namespace glycopipe::hyperopt {

enum class MetricMode { max, min };

struct SchedulerConfig {
  std::string metric = "val_auc";
  MetricMode mode = MetricMode::max;
  std::size_t max_t = 27;
  std::size_t grace_period = 1;
  double reduction_factor = 3.0;  // eta
  // Fraction of rung entries kept; defaults to 1/eta. Setting 1 disables stopping.
  std::optional<double> keep_fraction;

  void validate() const {
    require(max_t >= 1, "max_t must be >= 1");
    require(grace_period >= 1, "grace_period must be >= 1");
    require(reduction_factor >= 2.0, "reduction_factor must be >= 2");
    if (keep_fraction) require(*keep_fraction > 0.0 && *keep_fraction <= 1.0, "keep_fraction must lie in (0, 1]");
  }

  double fraction() const { return keep_fraction ? *keep_fraction : 1.0 / reduction_factor; }

  bool better(double a, double b) const { return mode == MetricMode::max ? a > b : a < b; }
};

// Rung milestones grace * eta^k strictly below max_t, in epochs.
inline std::vector<std::size_t> rung_milestones(const SchedulerConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> out;
  for (double t = static_cast<double>(cfg.grace_period); t < static_cast<double>(cfg.max_t);
       t *= cfg.reduction_factor) {
    const auto e = static_cast<std::size_t>(std::llround(t));
    if (out.empty() || e > out.back()) out.push_back(e);
  }
  return out;
}

inline std::optional<std::size_t> rung_of_epoch(const SchedulerConfig& cfg, std::size_t epoch) {
  const auto rungs = rung_milestones(cfg);
  for (std::size_t k = 0; k < rungs.size(); ++k)
    if (rungs[k] == epoch) return k;
  return std::nullopt;
}

enum class Decision { continue_trial, stop_trial };

// rung_metrics holds every metric recorded at this rung so far, including the
// deciding trial's own. The trial continues while fewer than
// max(1, ceil(n * fraction)) recorded metrics are strictly better than its
// own, so ties are kept.
inline Decision asha_decide(const SchedulerConfig& cfg, std::size_t epoch, double metric,
                            std::span<const double> rung_metrics) {
  cfg.validate();
  if (epoch < cfg.grace_period) return Decision::continue_trial;
  const auto n = static_cast<double>(rung_metrics.size());
  const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(n * cfg.fraction() - 1e-12)));
  std::size_t better = 0;
  for (double m : rung_metrics) better += cfg.better(m, metric) ? 1 : 0;
  return better < keep ? Decision::continue_trial : Decision::stop_trial;
}

}  // namespace glycopipe::hyperopt
