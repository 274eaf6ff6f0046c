// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <queue>
#include <tuple>
#include <utility>
#include <vector>

#include "glycopipe/common.hpp"
#include "glycopipe/serve/autoscale.hpp"
#include "glycopipe/serve/cache.hpp"

namespace glycopipe::serve {

enum class ServiceDistribution { deterministic, exponential };

struct WorkloadSpec {
  double arrival_rate = 200.0;  // requests per virtual second
  double zipf_exponent = 1.0;
  std::size_t n_keys = 100000;
  double duration = 600.0;     // arrivals stop here; the queue then drains
  double service_time = 0.05;  // mean inference time per request
  ServiceDistribution service = ServiceDistribution::exponential;
  double cache_latency = 0.0;
  std::size_t max_queue = std::numeric_limits<std::size_t>::max();  // arrivals beyond are dropped
  double control_interval = 15.0;  // autoscaler evaluation period
  bool autoscale = true;

  void validate() const {
    require(arrival_rate > 0.0, "arrival_rate must be > 0");
    require(n_keys >= 1, "n_keys must be >= 1");
    require(zipf_exponent >= 0.0, "zipf_exponent must be >= 0");
    require(duration > 0.0, "duration must be > 0");
    require(service_time > 0.0, "service_time must be > 0");
    require(control_interval > 0.0, "control_interval must be > 0");
  }
};

// Inverse-CDF sampler over keys 0..K-1 with P(k) proportional to (k+1)^-s.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double s) : cdf_(n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) cdf_[k] = (acc += std::pow(static_cast<double>(k + 1), -s));
    for (auto& c : cdf_) c /= acc;
  }
  std::size_t operator()(Rng& rng) const {
    const double u = uniform01(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

inline double exponential(Rng& rng, double mean) {
  double u = uniform01(rng);
  if (u <= 0.0) u = 0x1.0p-53;
  return -mean * std::log(u);
}

struct SimMetrics {
  std::size_t arrivals = 0;
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t served = 0;  // cache hits plus completed inferences
  std::size_t queued_at_end = 0;
  std::size_t dropped = 0;
  double hit_rate = 0.0;
  double mean_latency = 0.0;
  double p50 = 0.0, p99 = 0.0, p999 = 0.0;
  double mean_wait = 0.0;  // queueing delay of inferences
  double end_time = 0.0;
  double throughput = 0.0;  // served / end_time
  std::size_t max_replicas = 0;
  std::size_t scale_actions = 0;
  std::vector<std::pair<double, std::size_t>> replica_trace;
};

// Nearest-rank quantile of an ascending sequence.
inline double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return 0.0;
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

using Predictor = std::function<double(std::size_t key)>;

// Discrete-event simulation over a (time, sequence) event heap. A request's
// key is looked up in the cache; a miss waits FIFO for a free replica, runs
// inference, and stores the prediction on completion.
inline SimMetrics simulate_service(const WorkloadSpec& w, const CacheConfig& cache_cfg, const ScalingPolicy& policy,
                                   std::uint64_t seed, const Predictor& predict = {}) {
  w.validate();
  policy.validate();
  enum Kind { arrival = 0, completion = 1, scale_effective = 2, tick = 3 };
  using Event = std::tuple<double, std::size_t, int, std::size_t>;  // time, seq, kind, request
  std::priority_queue<Event, std::vector<Event>, std::greater<>> heap;
  std::size_t seq = 0;

  Rng arrivals_rng = make_rng(seed, 1), keys_rng = make_rng(seed, 2), service_rng = make_rng(seed, 3);
  const ZipfSampler zipf(w.n_keys, w.zipf_exponent);
  LruTtlCache<std::size_t, double> cache(cache_cfg);
  ScalingState scaling = ScalingState::initial(policy);

  struct Request {
    std::size_t key;
    double arrival;
  };
  std::vector<Request> requests;
  std::deque<std::size_t> waiting;
  std::size_t busy = 0;
  double busy_area = 0.0, last_t = 0.0, last_tick = 0.0;
  std::vector<double> latencies;
  double wait_sum = 0.0;
  std::size_t waits = 0;

  SimMetrics m;
  m.replica_trace.emplace_back(0.0, scaling.replicas);
  m.max_replicas = scaling.replicas;
  auto record_replicas = [&](double now) {
    if (m.replica_trace.back().second != scaling.replicas) m.replica_trace.emplace_back(now, scaling.replicas);
    m.max_replicas = std::max(m.max_replicas, scaling.replicas);
  };
  auto dispatch = [&](double now) {
    while (busy < scaling.replicas && !waiting.empty()) {
      const std::size_t id = waiting.front();
      waiting.pop_front();
      ++busy;
      wait_sum += now - requests[id].arrival;
      ++waits;
      const double s =
          w.service == ServiceDistribution::exponential ? exponential(service_rng, w.service_time) : w.service_time;
      heap.emplace(now + s, seq++, completion, id);
    }
  };

  heap.emplace(exponential(arrivals_rng, 1.0 / w.arrival_rate), seq++, arrival, 0);
  if (w.autoscale) heap.emplace(w.control_interval, seq++, tick, 0);

  while (!heap.empty()) {
    const auto [now, s, kind, id] = heap.top();
    heap.pop();
    busy_area += static_cast<double>(busy) * (now - last_t);
    last_t = now;
    m.end_time = now;
    switch (kind) {
      case arrival: {
        if (now >= w.duration) break;
        const std::size_t rid = requests.size();
        requests.push_back({zipf(keys_rng), now});
        ++m.arrivals;
        if (cache.get(requests[rid].key, now)) {
          ++m.hits;
          ++m.served;
          latencies.push_back(w.cache_latency);
        } else {
          ++m.misses;
          if (waiting.size() >= w.max_queue) {
            ++m.dropped;
          } else {
            waiting.push_back(rid);
            dispatch(now);
          }
        }
        const double next = now + exponential(arrivals_rng, 1.0 / w.arrival_rate);
        if (next < w.duration) heap.emplace(next, seq++, arrival, 0);
        break;
      }
      case completion: {
        --busy;
        const auto& r = requests[id];
        cache.put(r.key, predict ? predict(r.key) : static_cast<double>(r.key), now);
        ++m.served;
        latencies.push_back(now - r.arrival);
        dispatch(now);
        break;
      }
      case scale_effective:
        if (scaling.apply_due(now)) {
          record_replicas(now);
          dispatch(now);
        }
        break;
      case tick: {
        const double span = now - last_tick;
        const double cap = static_cast<double>(scaling.replicas) * span;
        Observation obs;
        obs.cpu_utilization = cap > 0.0 ? busy_area / cap : (waiting.empty() ? 0.0 : 1.0);
        obs.queue_length = waiting.size();
        busy_area = 0.0;
        last_tick = now;
        const bool had_pending = scaling.pending.has_value();
        autoscale_step(policy, scaling, obs, now);
        record_replicas(now);
        dispatch(now);
        if (scaling.pending && !had_pending) heap.emplace(scaling.pending_time, seq++, scale_effective, 0);
        const double next = now + w.control_interval;
        const bool work_left = !waiting.empty() || busy > 0 || scaling.pending.has_value();
        if (next < w.duration || (work_left && policy.cap() > 0)) heap.emplace(next, seq++, tick, 0);
        break;
      }
    }
  }

  m.queued_at_end = waiting.size();
  m.scale_actions = scaling.actions;
  m.hit_rate = m.arrivals ? static_cast<double>(m.hits) / static_cast<double>(m.arrivals) : 0.0;
  std::sort(latencies.begin(), latencies.end());
  if (!latencies.empty()) {
    double sum = 0.0;
    for (double l : latencies) sum += l;
    m.mean_latency = sum / static_cast<double>(latencies.size());
  }
  m.p50 = quantile_sorted(latencies, 0.50);
  m.p99 = quantile_sorted(latencies, 0.99);
  m.p999 = quantile_sorted(latencies, 0.999);
  m.mean_wait = waits ? wait_sum / static_cast<double>(waits) : 0.0;
  m.throughput = m.end_time > 0.0 ? static_cast<double>(m.served) / m.end_time : 0.0;
  return m;
}

// Expected queueing delay of an M/M/c queue (Erlang C).
inline double erlang_c_wait(double lambda, double mean_service, std::size_t c) {
  const double a = lambda * mean_service;  // offered load
  const double rho = a / static_cast<double>(c);
  require(rho < 1.0, "queue is unstable");
  double term = 1.0, sum = 1.0;  // a^k / k!
  for (std::size_t k = 1; k < c; ++k) {
    term *= a / static_cast<double>(k);
    sum += term;
  }
  const double last = term * a / static_cast<double>(c) / (1.0 - rho);
  const double pw = last / (sum + last);
  return pw * mean_service / (static_cast<double>(c) * (1.0 - rho));
}

}  // namespace glycopipe::serve
