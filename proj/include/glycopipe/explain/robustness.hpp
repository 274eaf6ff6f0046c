// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glycopipe/model/fusion.hpp"

namespace glycopipe::explain {

struct RobustnessReport {
  double epsilon = 0.0;
  std::size_t samples = 0;
  double unchanged_fraction = 1.0;  // predicted class kept under perturbation
  double clean_accuracy = 0.0;
  double adversarial_accuracy = 0.0;
};

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// x' = x + epsilon * sign(grad_x loss(x, y)), applied to statics and series.
inline model::Example fgsm_perturb(const model::FusionModel& m, const model::Example& x, double epsilon) {
  const model::Gradients g = model::backward(m, model::forward_trace(m, x), x.label);
  model::Example adv = x;
  adv.statics += epsilon * g.d_statics.unaryExpr(&sign_of);
  adv.series += epsilon * g.d_series.unaryExpr(&sign_of);
  return adv;
}

inline RobustnessReport fgsm_robustness(const model::FusionModel& m, const model::Dataset& data, double epsilon,
                                        double threshold = 0.5) {
  require(epsilon >= 0.0, "epsilon must be >= 0");
  require(!data.empty(), "no rows to perturb");
  RobustnessReport r;
  r.epsilon = epsilon;
  r.samples = data.size();
  std::size_t same = 0, clean_ok = 0, adv_ok = 0;
  for (const auto& x : data) {
    const int before = model::predict(m, x) >= threshold ? 1 : 0;
    const int after = model::predict(m, fgsm_perturb(m, x, epsilon)) >= threshold ? 1 : 0;
    same += before == after;
    clean_ok += before == x.label;
    adv_ok += after == x.label;
  }
  const auto n = static_cast<double>(data.size());
  r.unchanged_fraction = static_cast<double>(same) / n;
  r.clean_accuracy = static_cast<double>(clean_ok) / n;
  r.adversarial_accuracy = static_cast<double>(adv_ok) / n;
  return r;
}

}  // namespace glycopipe::explain
