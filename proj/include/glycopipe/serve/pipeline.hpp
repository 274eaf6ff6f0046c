// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "glycopipe/common.hpp"

namespace glycopipe::serve {

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"data_acquisition", "preprocessing", "feature_engineering",
                                                 "model_training", "model_evaluation"};
  return names;
}

inline std::string stage_title(const std::string& name) {
  if (name == "data_acquisition") return "Data Acquisition";
  if (name == "preprocessing") return "Preprocessing";
  if (name == "feature_engineering") return "Feature Engineering";
  if (name == "model_training") return "Model Training";
  if (name == "model_evaluation") return "Model Evaluation";
  return name;
}

// What one attempt of a stage did. virtual_seconds is the attempt's modelled
// cost; an attempt whose cost exceeds the stage timeout counts as a hang.
struct StageOutcome {
  bool ok = true;
  double virtual_seconds = 0.0;
  std::string message;
};

struct Stage {
  std::string name;
  std::function<StageOutcome(std::size_t attempt)> task;
  std::size_t retry_limit = 1;
  double timeout_seconds = 6.0 * 3600.0;
  double probe_interval = 45.0;
};

enum class StageStatus { success, failed, skipped };

inline const char* status_name(StageStatus s) {
  switch (s) {
    case StageStatus::success: return "success";
    case StageStatus::failed: return "failed";
    case StageStatus::skipped: return "skipped";
  }
  return "?";
}

struct StageReport {
  std::string name;
  StageStatus status = StageStatus::skipped;
  std::size_t attempts = 0;
  double virtual_seconds = 0.0;     // all attempts, including detection delays
  double detection_latency = 0.0;   // last failure: fault to detecting probe
  std::string message;
};

struct PipelineOptions {
  double probe_jitter = 5.0;  // each probe fires up to this late
  std::uint64_t seed = 0;
};

// Runs stages strictly in order. A failed attempt is noticed by the health
// probe: probes fire every probe_interval after the attempt starts, each
// delayed by a uniform jitter in [0, probe_jitter), and the first probe at or
// after the fault detects it. A stage is retried up to retry_limit times;
// after a final failure every later stage is reported as skipped. Task
// exceptions count as failures.
inline std::vector<StageReport> run_pipeline(const std::vector<Stage>& stages, const PipelineOptions& opt = {}) {
  require(opt.probe_jitter >= 0.0, "probe_jitter must be >= 0");
  Rng rng = make_rng(opt.seed, 0x9b);
  std::vector<StageReport> reports;
  bool blocked = false;
  for (const auto& st : stages) {
    StageReport rep;
    rep.name = st.name;
    if (blocked) {
      reports.push_back(rep);
      continue;
    }
    require(st.probe_interval > 0.0 && st.timeout_seconds > 0.0, "stage \"", st.name, "\" has invalid timing");
    for (std::size_t attempt = 1; attempt <= st.retry_limit + 1; ++attempt) {
      rep.attempts = attempt;
      StageOutcome out;
      try {
        out = st.task(attempt);
      } catch (const std::exception& e) {
        out.ok = false;
        out.message = e.what();
      }
      const bool hung = out.virtual_seconds > st.timeout_seconds;
      if (out.ok && !hung) {
        rep.status = StageStatus::success;
        rep.virtual_seconds += out.virtual_seconds;
        rep.message = out.message;
        break;
      }
      const double fault = hung ? st.timeout_seconds : out.virtual_seconds;
      double probe = 0.0;
      for (std::size_t k = 1;; ++k) {
        probe = static_cast<double>(k) * st.probe_interval + opt.probe_jitter * uniform01(rng);
        if (probe >= fault) break;
      }
      rep.detection_latency = probe - fault;
      rep.virtual_seconds += probe;
      rep.status = StageStatus::failed;
      rep.message = hung ? "timed out after " + format_double(st.timeout_seconds) + " s" : out.message;
    }
    if (rep.status != StageStatus::success) blocked = true;
    reports.push_back(rep);
  }
  return reports;
}

// Stage timing table in hours, with a total row.
inline void write_stage_table(std::ostream& os, const std::vector<StageReport>& reports) {
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %-8s %8s %18s\n", "Task Stage", "Status", "Attempts", "Virtual Time (h)");
  os << line;
  double total = 0.0;
  for (const auto& r : reports) {
    total += r.virtual_seconds;
    std::snprintf(line, sizeof line, "%-22s %-8s %8zu %18.4f\n", stage_title(r.name).c_str(), status_name(r.status),
                  r.attempts, r.virtual_seconds / 3600.0);
    os << line;
  }
  std::snprintf(line, sizeof line, "%-22s %-8s %8s %18.4f\n", "Total", "", "", total / 3600.0);
  os << line;
}

}  // namespace glycopipe::serve
