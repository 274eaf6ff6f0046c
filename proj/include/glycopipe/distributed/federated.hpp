// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "glycopipe/model/fusion.hpp"
#include "glycopipe/model/train.hpp"
#include "glycopipe/privacy/paillier.hpp"

namespace glycopipe::distributed {

using Eigen::Index;
using Eigen::VectorXd;

enum class AggregationMode { plain, encrypted };

// Returns the client's locally updated weights, starting from `global`.
using LocalUpdate = std::function<VectorXd(const model::FusionModel& global, const model::Dataset& shard, std::size_t client)>;

struct FederatedRoundConfig {
  std::size_t local_epochs = 1;
  double learning_rate = 0.05;
  AggregationMode mode = AggregationMode::plain;
  const privacy::PaillierKeyPair* keys = nullptr;
  const privacy::FixedPointCodec* codec = nullptr;
  std::uint64_t seed = 0;
};

struct RoundReport {
  std::size_t clients = 0;
  std::size_t coordinates = 0;
  std::size_t encryptions = 0;
  std::size_t decryptions = 0;
};

// Full-batch gradient descent on the client's shard for local_epochs steps.
inline VectorXd local_gradient_descent(const model::FusionModel& global, const model::Dataset& shard,
                                       const FederatedRoundConfig& cfg) {
  VectorXd flat = model::flatten(global.params);
  if (shard.empty()) return flat;
  model::FusionModel m = global;
  std::vector<std::size_t> rows(shard.size());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
  for (std::size_t e = 0; e < cfg.local_epochs; ++e) {
    flat -= cfg.learning_rate * model::gradient_sum(m, shard, rows) / static_cast<double>(shard.size());
    model::unflatten(flat, m.params);
  }
  return flat;
}

// Each client sends the delta between its local weights and the global ones;
// the server applies the uniform mean of the deltas. In encrypted mode every
// delta coordinate is fixed-point encoded and encrypted by its client, the
// server multiplies ciphertexts, and only the per-coordinate aggregate is
// decrypted.
inline model::FusionModel federated_round(const std::vector<model::Dataset>& clients, const model::FusionModel& global,
                                          const FederatedRoundConfig& cfg, const LocalUpdate& update = {},
                                          RoundReport* report = nullptr) {
  const std::size_t m = clients.size();
  require(m >= 1, "federated round needs at least one client");
  const VectorXd base = model::flatten(global.params);
  const auto P = base.size();
  std::vector<VectorXd> deltas;
  deltas.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    VectorXd local = update ? update(global, clients[k], k) : local_gradient_descent(global, clients[k], cfg);
    require(local.size() == P, "client ", k, " returned ", local.size(), " weights, expected ", P);
    deltas.push_back(local - base);
  }

  RoundReport rep;
  rep.clients = m;
  rep.coordinates = static_cast<std::size_t>(P);
  VectorXd mean = VectorXd::Zero(P);
  if (cfg.mode == AggregationMode::plain) {
    for (const auto& d : deltas) mean += d;
    mean /= static_cast<double>(m);
  } else {
    require(cfg.keys && cfg.codec, "encrypted aggregation needs a keypair and a codec");
    const auto& pk = cfg.keys->pub;
    const auto& codec = *cfg.codec;
    require(codec.modulus() == pk.n, "codec modulus does not match the public key");
    require(codec.capacity() >= static_cast<unsigned long>(m), "codec capacity ", codec.capacity(), " is below ", m,
            " clients");
    std::vector<Rng> client_rng;
    for (std::size_t k = 0; k < m; ++k) client_rng.push_back(make_rng(derive_seed(cfg.seed, k), 0xfed));
    for (Index j = 0; j < P; ++j) {
      privacy::Ciphertext acc;
      for (std::size_t k = 0; k < m; ++k) {
        privacy::BigInt z;
        try {
          z = codec.encode(deltas[k](j));
        } catch (const Error& e) {
          fail("client ", k, " coordinate ", j, ": ", e.what());
        }
        privacy::Ciphertext c = privacy::paillier_encrypt(pk, z, client_rng[k]);
        ++rep.encryptions;
        acc = k == 0 ? c : privacy::paillier_add(pk, acc, c);
      }
      const privacy::BigInt sum = privacy::paillier_decrypt(*cfg.keys, acc);
      ++rep.decryptions;
      mean(j) = codec.decode(sum, m) / static_cast<double>(m);
    }
  }
  if (report) *report = rep;
  model::FusionModel out = global;
  model::unflatten(base + mean, out.params);
  return out;
}

}  // namespace glycopipe::distributed
