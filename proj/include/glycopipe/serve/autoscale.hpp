// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <limits>
#include <optional>

#include "glycopipe/common.hpp"

namespace glycopipe::serve {

struct ScalingPolicy {
  std::size_t base_replicas = 2;
  double cpu_threshold = 0.75;
  std::size_t queue_threshold = 100;
  std::size_t max_scale = 5;  // cap is max_scale * base_replicas
  std::size_t step = 1;
  double scale_down_threshold = 0.4;
  double cooldown_seconds = 60.0;
  double scale_latency_seconds = 30.0;

  std::size_t cap() const { return max_scale * base_replicas; }

  void validate() const {
    require(cpu_threshold > 0.0 && cpu_threshold <= 1.0, "cpu_threshold must lie in (0, 1]");
    require(scale_down_threshold >= 0.0 && scale_down_threshold < cpu_threshold,
            "scale_down_threshold must lie below cpu_threshold");
    require(step >= 1, "scaling step must be >= 1");
    require(cooldown_seconds >= 0.0 && scale_latency_seconds >= 0.0, "times must be >= 0");
    require(max_scale >= 1 || base_replicas == 0, "max_scale must be >= 1");
  }
};

struct Observation {
  double cpu_utilization = 0.0;
  std::size_t queue_length = 0;
};

struct ScalingState {
  std::size_t replicas = 0;
  std::optional<std::size_t> pending;  // target taking effect at pending_time
  double pending_time = 0.0;
  double last_action = -std::numeric_limits<double>::infinity();
  std::size_t actions = 0;

  static ScalingState initial(const ScalingPolicy& p) {
    ScalingState s;
    s.replicas = p.base_replicas;
    return s;
  }

  // Applies a scheduled change whose latency has elapsed.
  bool apply_due(double now) {
    if (pending && now >= pending_time) {
      replicas = *pending;
      pending.reset();
      return true;
    }
    return false;
  }
};

// Scale up by `step` when cpu > threshold or the queue exceeds its threshold,
// scale down by `step` when cpu < scale_down_threshold; at most one action
// per cooldown window, and each action takes effect scale_latency later.
// Returns the replica count in effect at `now`.
inline std::size_t autoscale_step(const ScalingPolicy& policy, ScalingState& state, const Observation& obs,
                                  double now) {
  policy.validate();
  state.apply_due(now);
  if (now - state.last_action < policy.cooldown_seconds) return state.replicas;
  const std::size_t planned = state.pending.value_or(state.replicas);
  std::size_t desired = planned;
  if (obs.cpu_utilization > policy.cpu_threshold || obs.queue_length > policy.queue_threshold)
    desired = std::min(policy.cap(), planned + policy.step);
  else if (obs.cpu_utilization < policy.scale_down_threshold)
    desired = std::max(policy.base_replicas, planned >= policy.step ? planned - policy.step : 0);
  if (desired != planned) {
    state.pending = desired;
    state.pending_time = now + policy.scale_latency_seconds;
    state.last_action = now;
    ++state.actions;
    state.apply_due(now);
  }
  return state.replicas;
}

}  // namespace glycopipe::serve
