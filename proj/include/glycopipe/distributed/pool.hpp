// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "glycopipe/distributed/ring.hpp"
#include "glycopipe/model/fusion.hpp"
#include "glycopipe/model/train.hpp"

namespace glycopipe::distributed {

inline constexpr std::size_t kMaxWorkers = 100;

// Worker w holds rows {r : r mod p == w}. A pool with zero workers is idle.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t rows, std::size_t workers = 1) : rows_(rows) { resize(workers); }

  void resize(std::size_t workers) {
    require(workers <= kMaxWorkers, "pool size ", workers, " exceeds ", kMaxWorkers);
    shards_.assign(workers, {});
    for (std::size_t r = 0; r < rows_ && workers > 0; ++r) shards_[r % workers].push_back(r);
  }

  std::size_t size() const { return shards_.size(); }
  bool idle() const { return shards_.empty(); }
  std::size_t rows() const { return rows_; }
  const std::vector<std::vector<std::size_t>>& shards() const { return shards_; }
  double virtual_clock() const { return clock_; }
  void advance(double dt) { clock_ += dt; }

 private:
  std::size_t rows_;
  std::vector<std::vector<std::size_t>> shards_;
  double clock_ = 0.0;
};

struct DataParallelConfig {
  double learning_rate = 0.01;
  double compute_cost_per_row = 1.0;      // virtual seconds per example gradient
  double comm_cost_per_element = 1e-4;    // virtual seconds per transferred element per ring step
  bool threaded_allreduce = false;
};

struct SpeedupReport {
  std::size_t workers = 0;
  double serial_time = 0.0;
  double parallel_time = 0.0;
  double speedup = 1.0;
  std::size_t elements_transferred = 0;
  double loss = 0.0;  // mean BCE at the start-of-epoch weights
};

// One full-batch gradient step. Each worker sums its shard's per-example
// gradients (an empty shard contributes zeros), the sums are ring-reduced,
// and the average gradient is applied with plain SGD. The result does not
// depend on the pool size beyond floating-point reassociation.
inline SpeedupReport data_parallel_epoch(WorkerPool& pool, model::FusionModel& m, const model::Dataset& data,
                                         const DataParallelConfig& cfg) {
  require(!pool.idle(), "worker pool is idle");
  require(pool.rows() == data.size(), "pool was sharded for ", pool.rows(), " rows but data has ", data.size());
  require(!data.empty(), "training data is empty");
  const std::size_t p = pool.size();
  std::vector<VectorXd> local(p);
  double loss = 0.0, max_rows = 0.0;
  for (std::size_t w = 0; w < p; ++w) {
    double l = 0.0;
    local[w] = model::gradient_sum(m, data, pool.shards()[w], &l);
    loss += l;
    max_rows = std::max(max_rows, static_cast<double>(pool.shards()[w].size()));
  }
  AllReduceResult red = ring_allreduce(local, cfg.threaded_allreduce);
  VectorXd flat = model::flatten(m.params);
  flat -= cfg.learning_rate * red.outputs.front() / static_cast<double>(data.size());
  model::unflatten(flat, m.params);

  SpeedupReport rep;
  rep.workers = p;
  rep.loss = loss / static_cast<double>(data.size());
  rep.elements_transferred = red.log.total_elements();
  rep.serial_time = static_cast<double>(data.size()) * cfg.compute_cost_per_row;
  const double chunk = static_cast<double>(red.padded_length) / static_cast<double>(p);
  const double ring_steps = 2.0 * static_cast<double>(p - 1);
  rep.parallel_time = max_rows * cfg.compute_cost_per_row + ring_steps * chunk * cfg.comm_cost_per_element;
  rep.speedup = rep.serial_time / rep.parallel_time;
  pool.advance(rep.parallel_time);
  return rep;
}

// Evaluated at epoch boundaries: the trigger (if any) wins over the schedule,
// and the result is clamped to [min_workers, max_workers].
struct ElasticPolicy {
  std::size_t min_workers = 0;
  std::size_t max_workers = kMaxWorkers;
  std::map<std::size_t, std::size_t> schedule;  // epoch index -> workers
  std::function<std::optional<std::size_t>(std::size_t epoch, const WorkerPool&)> trigger;

  std::size_t target(std::size_t epoch, const WorkerPool& pool) const {
    require(min_workers <= max_workers && max_workers <= kMaxWorkers, "invalid elastic bounds");
    std::size_t t = pool.size();
    if (auto it = schedule.find(epoch); it != schedule.end()) t = it->second;
    if (trigger)
      if (auto v = trigger(epoch, pool)) t = *v;
    return std::clamp(t, min_workers, max_workers);
  }
};

// Runs `epochs` full-batch steps, resizing between epochs. Epochs that find
// the pool idle are skipped and reported with workers = 0.
inline std::vector<SpeedupReport> elastic_train(WorkerPool& pool, model::FusionModel& m, const model::Dataset& data,
                                                const DataParallelConfig& cfg, std::size_t epochs,
                                                const ElasticPolicy& policy) {
  std::vector<SpeedupReport> reports;
  for (std::size_t e = 0; e < epochs; ++e) {
    const std::size_t t = policy.target(e, pool);
    if (t != pool.size()) pool.resize(t);
    if (pool.idle()) {
      reports.push_back({});
      continue;
    }
    reports.push_back(data_parallel_epoch(pool, m, data, cfg));
  }
  return reports;
}

}  // namespace glycopipe::distributed
