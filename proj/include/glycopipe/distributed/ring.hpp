// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <barrier>
#include <cstddef>
#include <ostream>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "glycopipe/common.hpp"

namespace glycopipe::distributed {

using Eigen::Index;
using Eigen::VectorXd;

enum class Phase { reduce_scatter, all_gather };

inline std::string_view phase_name(Phase p) { return p == Phase::reduce_scatter ? "reduce-scatter" : "all-gather"; }

struct Transfer {
  std::size_t step = 0;  // global step, reduce-scatter steps come first
  std::size_t src = 0, dst = 0;
  std::size_t chunk = 0;
  std::size_t count = 0;  // elements
  Phase phase = Phase::reduce_scatter;
};

struct TransferLog {
  std::vector<Transfer> records;

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.count;
    return n;
  }

  // One JSON object per line.
  void write_jsonl(std::ostream& os) const {
    for (const auto& r : records)
      os << "{\"step\":" << r.step << ",\"src\":" << r.src << ",\"dst\":" << r.dst << ",\"chunk\":" << r.chunk
         << ",\"count\":" << r.count << ",\"phase\":\"" << phase_name(r.phase) << "\"}\n";
  }
};

struct AllReduceResult {
  std::vector<VectorXd> outputs;  // one per worker, all equal
  TransferLog log;
  std::size_t padded_length = 0;
};

namespace detail {

inline std::size_t mod(long long a, std::size_t p) {
  const auto m = static_cast<long long>(p);
  return static_cast<std::size_t>(((a % m) + m) % m);
}

// Worker `i` at step s of a phase: the chunk it receives from its left
// neighbour. In reduce-scatter worker i sends chunk (i - s) mod p; in
// all-gather it sends chunk (i + 1 - s) mod p.
inline std::size_t incoming_chunk(Phase ph, std::size_t i, std::size_t s, std::size_t p) {
  const auto left = static_cast<long long>(mod(static_cast<long long>(i) - 1, p));
  return ph == Phase::reduce_scatter ? mod(left - static_cast<long long>(s), p)
                                     : mod(left + 1 - static_cast<long long>(s), p);
}

inline void receive(std::vector<VectorXd>& buf, Phase ph, std::size_t i, std::size_t s, std::size_t p, Index c) {
  const std::size_t left = mod(static_cast<long long>(i) - 1, p);
  const auto k = static_cast<Index>(incoming_chunk(ph, i, s, p));
  if (ph == Phase::reduce_scatter)
    buf[i].segment(k * c, c) += buf[left].segment(k * c, c);
  else
    buf[i].segment(k * c, c) = buf[left].segment(k * c, c);
}

}  // namespace detail

// Reduce-scatter for p-1 steps, then all-gather for p-1 steps, over p equal
// chunks of the zero-padded input. Within a step the chunk a worker sends is
// never the chunk it receives, so the in-order sequential schedule and the
// threaded one (one thread per worker, barrier per step) compute the same
// floating-point operations in the same order.
inline AllReduceResult ring_allreduce(const std::vector<VectorXd>& inputs, bool threaded = false) {
  const std::size_t p = inputs.size();
  require(p >= 1, "ring all-reduce needs at least one worker");
  const Index N = inputs.front().size();
  for (std::size_t i = 0; i < p; ++i)
    require(inputs[i].size() == N, "worker ", i, " vector has length ", inputs[i].size(), ", expected ", N);

  const auto pi = static_cast<Index>(p);
  const Index c = (N + pi - 1) / pi;
  const Index padded = c * pi;
  std::vector<VectorXd> buf(p, VectorXd::Zero(padded));
  for (std::size_t i = 0; i < p; ++i) buf[i].head(N) = inputs[i];

  AllReduceResult out;
  out.padded_length = static_cast<std::size_t>(padded);
  if (p > 1) {
    for (Phase ph : {Phase::reduce_scatter, Phase::all_gather})
      for (std::size_t s = 0; s + 1 < p; ++s) {
        const std::size_t step = (ph == Phase::reduce_scatter ? 0 : p - 1) + s;
        for (std::size_t src = 0; src < p; ++src) {
          const std::size_t dst = (src + 1) % p;
          out.log.records.push_back({step, src, dst, detail::incoming_chunk(ph, dst, s, p), static_cast<std::size_t>(c), ph});
        }
      }

    if (threaded) {
      std::barrier sync(static_cast<std::ptrdiff_t>(p));
      std::vector<std::jthread> workers;
      for (std::size_t i = 0; i < p; ++i)
        workers.emplace_back([&, i] {
          for (Phase ph : {Phase::reduce_scatter, Phase::all_gather})
            for (std::size_t s = 0; s + 1 < p; ++s) {
              detail::receive(buf, ph, i, s, p, c);
              sync.arrive_and_wait();
            }
        });
    } else {
      for (Phase ph : {Phase::reduce_scatter, Phase::all_gather})
        for (std::size_t s = 0; s + 1 < p; ++s)
          for (std::size_t i = 0; i < p; ++i) detail::receive(buf, ph, i, s, p, c);
    }
  }
  out.outputs.reserve(p);
  for (auto& b : buf) out.outputs.push_back(b.head(N));
  return out;
}

}  // namespace glycopipe::distributed
