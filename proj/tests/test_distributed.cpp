// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "glycopipe/glycopipe.hpp"
#include "oracles.hpp"

namespace gp = glycopipe;
namespace ds = glycopipe::distributed;
namespace md = glycopipe::model;
using Eigen::VectorXd;

namespace {

std::vector<VectorXd> random_inputs(std::size_t p, Eigen::Index n, std::uint64_t seed) {
  gp::Rng rng = gp::make_rng(seed, 5);
  std::vector<VectorXd> v(p, VectorXd(n));
  for (auto& x : v)
    for (Eigen::Index k = 0; k < n; ++k) x(k) = gp::standard_normal(rng);
  return v;
}

}  // namespace

TEST(Ring, SingleWorkerHasEmptyLog) {
  const auto r = ds::ring_allreduce(random_inputs(1, 5, 1));
  EXPECT_TRUE(r.log.records.empty());
  EXPECT_EQ(r.outputs.size(), 1u);
}

TEST(Ring, FourWorkersOfOnes) {
  const auto r = ds::ring_allreduce(std::vector<VectorXd>(4, VectorXd::Ones(4)));
  for (const auto& o : r.outputs) EXPECT_EQ(o, VectorXd::Constant(4, 4.0));
  EXPECT_EQ(r.log.records.size(), 24u);
  for (const auto& t : r.log.records) EXPECT_EQ(t.dst, (t.src + 1) % 4);
}

TEST(Ring, CanonicalChunkSchedule) {
  for (std::size_t p = 2; p <= 6; ++p) {
    const auto r = ds::ring_allreduce(random_inputs(p, 13, p));
    std::vector<std::size_t> sent(p, 0), received(p, 0);
    for (const auto& t : r.log.records) {
      ++sent[t.src];
      ++received[t.dst];
      const long long i = static_cast<long long>(t.src), pp = static_cast<long long>(p);
      if (t.phase == ds::Phase::reduce_scatter) {
        const long long s = static_cast<long long>(t.step);
        EXPECT_EQ(t.chunk, static_cast<std::size_t>(((i - s) % pp + pp) % pp));
      } else {
        const long long s = static_cast<long long>(t.step) - (pp - 1);
        EXPECT_EQ(t.chunk, static_cast<std::size_t>(((i + 1 - s) % pp + pp) % pp));
      }
    }
    for (std::size_t w = 0; w < p; ++w) {
      EXPECT_EQ(sent[w], 2 * (p - 1));
      EXPECT_EQ(received[w], 2 * (p - 1));
    }
  }
}

TEST(Ring, MatchesDirectSumAndPermutation) {
  auto inputs = random_inputs(5, 17, 9);
  const auto r = ds::ring_allreduce(inputs);
  const VectorXd ref = oracle::direct_sum(inputs);
  std::rotate(inputs.begin(), inputs.begin() + 2, inputs.end());
  const auto rp = ds::ring_allreduce(inputs);
  for (std::size_t w = 0; w < 5; ++w) {
    EXPECT_LT((r.outputs[w] - ref).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((rp.outputs[w] - ref).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(r.outputs[w], r.outputs[0]);
  }
}

TEST(Ring, ThreadedIsBitIdentical) {
  const auto inputs = random_inputs(7, 30, 11);
  const auto a = ds::ring_allreduce(inputs, false);
  const auto b = ds::ring_allreduce(inputs, true);
  for (std::size_t w = 0; w < 7; ++w) EXPECT_EQ(a.outputs[w], b.outputs[w]);
  std::ostringstream la, lb;
  a.log.write_jsonl(la);
  b.log.write_jsonl(lb);
  EXPECT_EQ(la.str(), lb.str());
}

TEST(Ring, InvalidInputsRejected) {
  EXPECT_THROW(ds::ring_allreduce({}), gp::Error);
  EXPECT_THROW(ds::ring_allreduce({VectorXd::Ones(3), VectorXd::Ones(4)}), gp::Error);
}

TEST(Pool, ShardsPartitionRows) {
  for (std::size_t p = 1; p <= 12; ++p) {
    ds::WorkerPool pool(37, p);
    std::set<std::size_t> seen;
    for (std::size_t w = 0; w < p; ++w)
      for (std::size_t r : pool.shards()[w]) {
        EXPECT_EQ(r % p, w);
        EXPECT_TRUE(seen.insert(r).second);
      }
    EXPECT_EQ(seen.size(), 37u);
  }
}

TEST(Pool, ResizeRestoresShards) {
  ds::WorkerPool pool(20, 2);
  const auto before = pool.shards();
  pool.resize(2);
  EXPECT_EQ(pool.shards(), before);
  pool.resize(4);
  EXPECT_EQ(pool.size(), 4u);
  pool.resize(2);
  EXPECT_EQ(pool.shards(), before);
  EXPECT_THROW(pool.resize(ds::kMaxWorkers + 1), gp::Error);
}

TEST(Pool, ZeroWorkersIsIdle) {
  ds::WorkerPool pool(10, 0);
  EXPECT_TRUE(pool.idle());
  const auto a = fixtures::small_arch();
  auto m = fixtures::random_model(a, 1);
  const auto data = fixtures::random_dataset(a, 10, 3, 1);
  EXPECT_THROW(ds::data_parallel_epoch(pool, m, data, {}), gp::Error);
}

TEST(DataParallel, SingleWorkerSpeedupIsOne) {
  const auto a = fixtures::small_arch();
  auto m = fixtures::random_model(a, 2);
  const auto data = fixtures::random_dataset(a, 24, 3, 2);
  ds::WorkerPool pool(data.size(), 1);
  const auto rep = ds::data_parallel_epoch(pool, m, data, {});
  EXPECT_DOUBLE_EQ(rep.speedup, 1.0);
  EXPECT_GT(pool.virtual_clock(), 0.0);
  EXPECT_EQ(rep.elements_transferred, 0u);
}

TEST(DataParallel, WorkerCountInvariant) {
  const auto a = fixtures::small_arch();
  const auto data = fixtures::random_dataset(a, 30, 4, 3);
  md::FusionModel ref = fixtures::random_model(a, 3);
  ds::WorkerPool one(data.size(), 1);
  for (int e = 0; e < 2; ++e) ds::data_parallel_epoch(one, ref, data, {});
  for (std::size_t p : {2u, 3u, 7u}) {
    md::FusionModel m = fixtures::random_model(a, 3);
    ds::WorkerPool pool(data.size(), p);
    for (int e = 0; e < 2; ++e) ds::data_parallel_epoch(pool, m, data, {});
    EXPECT_LT((md::flatten(m.params) - md::flatten(ref.params)).cwiseAbs().maxCoeff(), 1e-10) << p;
  }
}

TEST(DataParallel, MoreWorkersFasterWhenComputeDominates) {
  const auto a = fixtures::small_arch();
  const auto data = fixtures::random_dataset(a, 64, 3, 4);
  auto m = fixtures::random_model(a, 4);
  ds::WorkerPool pool(data.size(), 4);
  const auto rep = ds::data_parallel_epoch(pool, m, data, {0.01, 1.0, 1e-6, false});
  EXPECT_GT(rep.speedup, 3.5);
  EXPECT_LE(rep.speedup, 4.0);
}

TEST(Elastic, ScheduleAndIdleEpochs) {
  const auto a = fixtures::small_arch();
  const auto data = fixtures::random_dataset(a, 16, 3, 5);
  auto m = fixtures::random_model(a, 5);
  ds::WorkerPool pool(data.size(), 1);
  ds::ElasticPolicy policy;
  policy.schedule = {{1, 4}, {2, 0}, {3, 2}};
  const auto reports = ds::elastic_train(pool, m, data, {}, 4, policy);
  ASSERT_EQ(reports.size(), 4u);
  EXPECT_EQ(reports[0].workers, 1u);
  EXPECT_EQ(reports[1].workers, 4u);
  EXPECT_EQ(reports[2].workers, 0u);
  EXPECT_EQ(reports[3].workers, 2u);
}

TEST(Federated, SingleClientEqualsItsUpdate) {
  const auto a = fixtures::small_arch();
  const auto global = fixtures::random_model(a, 6);
  const auto shard = fixtures::random_dataset(a, 12, 3, 6);
  ds::FederatedRoundConfig cfg;
  cfg.local_epochs = 2;
  const auto out = ds::federated_round({shard}, global, cfg);
  EXPECT_LT((md::flatten(out.params) - ds::local_gradient_descent(global, shard, cfg)).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(Federated, IdenticalClientsEqualOneClient) {
  const auto a = fixtures::small_arch();
  const auto global = fixtures::random_model(a, 7);
  const auto shard = fixtures::random_dataset(a, 12, 3, 7);
  ds::FederatedRoundConfig cfg;
  const auto one = ds::federated_round({shard}, global, cfg);
  const auto three = ds::federated_round({shard, shard, shard}, global, cfg);
  EXPECT_LT((md::flatten(one.params) - md::flatten(three.params)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Federated, EncryptedDecryptsOncePerCoordinate) {
  const auto a = fixtures::small_arch(2, 2, 1, {});
  const auto global = fixtures::random_model(a, 8);
  const auto kp = gp::privacy::paillier_keygen(128, 8);
  const gp::privacy::FixedPointCodec codec(kp.pub.n);
  ds::FederatedRoundConfig cfg;
  cfg.mode = ds::AggregationMode::encrypted;
  cfg.keys = &kp;
  cfg.codec = &codec;
  std::vector<md::Dataset> clients;
  for (std::uint64_t k = 0; k < 3; ++k) clients.push_back(fixtures::random_dataset(a, 8, 3, 80 + k));
  ds::RoundReport rep;
  const auto enc = ds::federated_round(clients, global, cfg, {}, &rep);
  EXPECT_EQ(rep.decryptions, rep.coordinates);
  EXPECT_EQ(rep.encryptions, 3 * rep.coordinates);
  cfg.mode = ds::AggregationMode::plain;
  const auto plain = ds::federated_round(clients, global, cfg);
  EXPECT_LE((md::flatten(enc.params) - md::flatten(plain.params)).cwiseAbs().maxCoeff(), 3.0 / std::ldexp(1.0, 40));
}

TEST(Federated, OverflowingCoordinateNamed) {
  const auto a = fixtures::small_arch(2, 2, 1, {});
  const auto global = fixtures::random_model(a, 9);
  const auto kp = gp::privacy::paillier_keygen(128, 9);
  const gp::privacy::FixedPointCodec codec(kp.pub.n, 1.0);
  ds::FederatedRoundConfig cfg;
  cfg.mode = ds::AggregationMode::encrypted;
  cfg.keys = &kp;
  cfg.codec = &codec;
  const auto shard = fixtures::random_dataset(a, 4, 2, 9);
  ds::LocalUpdate huge = [](const md::FusionModel& g, const md::Dataset&, std::size_t) {
    Eigen::VectorXd w = md::flatten(g.params);
    w(0) += 5.0;
    return w;
  };
  try {
    ds::federated_round({shard}, global, cfg, huge);
    FAIL() << "expected an error";
  } catch (const gp::Error& e) {
    EXPECT_NE(std::string(e.what()).find("coordinate 0"), std::string::npos) << e.what();
  }
}

TEST(Federated, MissingKeysRejected) {
  const auto a = fixtures::small_arch();
  ds::FederatedRoundConfig cfg;
  cfg.mode = ds::AggregationMode::encrypted;
  EXPECT_THROW(ds::federated_round({fixtures::random_dataset(a, 3, 2, 1)}, fixtures::random_model(a, 1), cfg),
               gp::Error);
  EXPECT_THROW(ds::federated_round({}, fixtures::random_model(a, 1), {}), gp::Error);
}
