// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glycopipe/glycopipe.hpp"

namespace fixtures {

using glycopipe::Rng;
using glycopipe::model::Architecture;
using glycopipe::model::Dataset;
using glycopipe::model::Example;
using glycopipe::model::FusionModel;

inline Example random_example(const Architecture& a, Eigen::Index T, Rng& rng) {
  Example x;
  x.statics.resize(static_cast<Eigen::Index>(a.static_dim));
  for (Eigen::Index k = 0; k < x.statics.size(); ++k) x.statics(k) = glycopipe::standard_normal(rng);
  x.series.resize(T, static_cast<Eigen::Index>(a.series_dim));
  for (Eigen::Index k = 0; k < x.series.size(); ++k) x.series.data()[k] = glycopipe::standard_normal(rng);
  x.label = glycopipe::uniform01(rng) < 0.5 ? 1 : 0;
  return x;
}

inline Dataset random_dataset(const Architecture& a, std::size_t n, Eigen::Index T, std::uint64_t seed) {
  Rng rng = glycopipe::make_rng(seed, 0xda7a);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) d.push_back(random_example(a, T, rng));
  return d;
}

inline Architecture small_arch(std::size_t static_dim = 3, std::size_t hidden = 3, std::size_t layers = 2,
                               std::vector<std::size_t> mlp = {4}) {
  return {static_dim, 1, hidden, layers, std::move(mlp)};
}

inline FusionModel random_model(const Architecture& a, std::uint64_t seed, double dropout = 0.0) {
  glycopipe::model::TrainConfig cfg;
  cfg.seed = seed;
  cfg.dropout_rate = dropout;
  return FusionModel::initialize(a, cfg);
}

// A labelled dataset in which the first static feature and the series mean
// separate the classes, so training has something to find.
inline Dataset separable_dataset(std::size_t n, std::size_t static_dim, Eigen::Index T, std::uint64_t seed) {
  Rng rng = glycopipe::make_rng(seed, 0x5e9a);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    Example x;
    x.label = glycopipe::uniform01(rng) < 0.5 ? 1 : 0;
    const double shift = x.label ? 1.0 : -1.0;
    x.statics.resize(static_cast<Eigen::Index>(static_dim));
    for (Eigen::Index k = 0; k < x.statics.size(); ++k)
      x.statics(k) = glycopipe::standard_normal(rng) + (k == 0 ? shift : 0.0);
    x.series.resize(T, 1);
    for (Eigen::Index t = 0; t < T; ++t) x.series(t, 0) = glycopipe::standard_normal(rng) + 0.5 * shift;
    d.push_back(std::move(x));
  }
  return d;
}

}  // namespace fixtures
