// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// One JSON document configures every subcommand. Each section is optional
// and keys missing from a section keep their defaults.

#include <cmath>
#include <limits>
#include <string>

#include <json.hpp>

#include "glycopipe/checkpoint.hpp"
#include "glycopipe/data/cohort.hpp"
#include "glycopipe/hyperopt/tune.hpp"
#include "glycopipe/model/config.hpp"
#include "glycopipe/preprocess/state.hpp"
#include "glycopipe/serve/autoscale.hpp"
#include "glycopipe/serve/cache.hpp"
#include "glycopipe/serve/simulator.hpp"

namespace glycopipe::app {

using nlohmann::json;

template <typename T>
void get_if(const json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

struct TuningSection {
  std::size_t budget = 100;
  double eta = 3.0;
  std::size_t grace = 1;
  std::size_t max_t = 27;
  std::size_t parallelism = 1;
  std::string proposer = "random";
};

struct PipelineSection {
  double test_fraction = 0.2;
  std::size_t retry_limit = 1;
  double timeout_seconds = 6.0 * 3600.0;
  double probe_interval = 45.0;
  double probe_jitter = 5.0;
  // Test hooks: the named stage fails (or hangs past its timeout) on its
  // first `inject_attempts` attempts.
  std::string inject_failure;
  std::string inject_hang;
  std::size_t inject_attempts = 0;
};

struct AppConfig {
  data::CohortSpec cohort;
  preprocess::PreprocessConfig preprocess;
  model::TrainConfig model;
  TuningSection tuning;
  PipelineSection pipeline;
  serve::CacheConfig cache;
  serve::ScalingPolicy scaling;
  serve::WorkloadSpec workload;
};

inline void from_json(const json& j, data::CohortSpec& c) {
  get_if(j, "n", c.n);
  get_if(j, "seed", c.seed);
  get_if(j, "prevalence", c.prevalence);
  get_if(j, "missing_rate", c.missing_rate);
  get_if(j, "n_noise_features", c.n_noise_features);
  get_if(j, "effect_weights", c.effect_weights);
  get_if(j, "series_signal", c.series_signal);
  get_if(j, "series_length", c.series_length);
}

inline void to_json(json& j, const data::CohortSpec& c) {
  j = {{"n", c.n},
       {"seed", c.seed},
       {"prevalence", c.prevalence},
       {"missing_rate", c.missing_rate},
       {"n_noise_features", c.n_noise_features},
       {"effect_weights", c.effect_weights},
       {"series_signal", c.series_signal},
       {"series_length", c.series_length}};
}

inline AppConfig parse_config(const json& j) {
  AppConfig c;
  if (j.contains("cohort")) from_json(j.at("cohort"), c.cohort);
  if (j.contains("preprocess")) preprocess::from_json(j.at("preprocess"), c.preprocess);
  if (j.contains("model")) model::from_json(j.at("model"), c.model);
  if (j.contains("tuning")) {
    const auto& t = j.at("tuning");
    get_if(t, "budget", c.tuning.budget);
    get_if(t, "eta", c.tuning.eta);
    get_if(t, "grace", c.tuning.grace);
    get_if(t, "max_t", c.tuning.max_t);
    get_if(t, "parallelism", c.tuning.parallelism);
    get_if(t, "proposer", c.tuning.proposer);
  }
  if (j.contains("pipeline")) {
    const auto& p = j.at("pipeline");
    get_if(p, "test_fraction", c.pipeline.test_fraction);
    get_if(p, "retry_limit", c.pipeline.retry_limit);
    get_if(p, "timeout_seconds", c.pipeline.timeout_seconds);
    get_if(p, "probe_interval", c.pipeline.probe_interval);
    get_if(p, "probe_jitter", c.pipeline.probe_jitter);
    get_if(p, "inject_failure", c.pipeline.inject_failure);
    get_if(p, "inject_hang", c.pipeline.inject_hang);
    get_if(p, "inject_attempts", c.pipeline.inject_attempts);
  }
  if (j.contains("cache")) {
    const auto& k = j.at("cache");
    get_if(k, "capacity", c.cache.capacity);
    if (k.contains("ttl_seconds")) {
      // null means no expiry
      c.cache.ttl_seconds = k.at("ttl_seconds").is_null() ? std::numeric_limits<double>::infinity()
                                                          : k.at("ttl_seconds").get<double>();
    }
  }
  if (j.contains("scaling")) {
    const auto& s = j.at("scaling");
    get_if(s, "base_replicas", c.scaling.base_replicas);
    get_if(s, "cpu_threshold", c.scaling.cpu_threshold);
    get_if(s, "queue_threshold", c.scaling.queue_threshold);
    get_if(s, "max_scale", c.scaling.max_scale);
    get_if(s, "step", c.scaling.step);
    get_if(s, "scale_down_threshold", c.scaling.scale_down_threshold);
    get_if(s, "cooldown_seconds", c.scaling.cooldown_seconds);
    get_if(s, "scale_latency_seconds", c.scaling.scale_latency_seconds);
  }
  if (j.contains("workload")) {
    const auto& w = j.at("workload");
    get_if(w, "arrival_rate", c.workload.arrival_rate);
    get_if(w, "zipf_exponent", c.workload.zipf_exponent);
    get_if(w, "n_keys", c.workload.n_keys);
    get_if(w, "duration", c.workload.duration);
    get_if(w, "service_time", c.workload.service_time);
    if (w.contains("service")) {
      const auto s = w.at("service").get<std::string>();
      require(s == "exponential" || s == "deterministic", "unknown service distribution \"", s, "\"");
      c.workload.service =
          s == "exponential" ? serve::ServiceDistribution::exponential : serve::ServiceDistribution::deterministic;
    }
    get_if(w, "cache_latency", c.workload.cache_latency);
    get_if(w, "control_interval", c.workload.control_interval);
    get_if(w, "autoscale", c.workload.autoscale);
  }
  c.cohort.validate();
  c.model.validate();
  return c;
}

inline AppConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    fail("cannot parse config \"", path, "\": ", e.what());
  }
  return parse_config(j);
}

}  // namespace glycopipe::app
