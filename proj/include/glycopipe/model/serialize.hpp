// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include <json.hpp>

#include "glycopipe/checkpoint.hpp"
#include "glycopipe/model/fusion.hpp"
#include "glycopipe/model/quantize.hpp"

namespace glycopipe::model {

inline nlohmann::json architecture_json(const Architecture& a) {
  return {{"static_dim", a.static_dim},
          {"series_dim", a.series_dim},
          {"hidden_size", a.hidden_size},
          {"lstm_layers", a.lstm_layers},
          {"mlp_hidden", a.mlp_hidden}};
}

inline Architecture architecture_from_json(const nlohmann::json& j) {
  Architecture a;
  a.static_dim = j.at("static_dim").get<std::size_t>();
  a.series_dim = j.at("series_dim").get<std::size_t>();
  a.hidden_size = j.at("hidden_size").get<std::size_t>();
  a.lstm_layers = j.at("lstm_layers").get<std::size_t>();
  a.mlp_hidden = j.at("mlp_hidden").get<std::vector<std::size_t>>();
  return a;
}

inline io::Checkpoint to_checkpoint(const FusionModel& m) {
  io::Checkpoint ck;
  ck.config = {{"kind", "fusion_model"},
               {"architecture", architecture_json(m.arch)},
               {"dropout_rate", m.dropout_rate},
               {"train_config", m.hyper}};
  visit_tensors(m.params, [&](const std::string& name, const MatrixXd& t) {
    io::Entry e;
    e.name = name;
    e.dtype = io::DType::f64;
    e.shape = {static_cast<std::uint64_t>(t.rows()), static_cast<std::uint64_t>(t.cols())};
    // Row-major on disk.
    for (Index r = 0; r < t.rows(); ++r)
      for (Index c = 0; c < t.cols(); ++c) e.f64.push_back(t(r, c));
    ck.entries.push_back(std::move(e));
  });
  return ck;
}

inline io::Checkpoint to_checkpoint(const QuantizedModel& q) {
  io::Checkpoint ck;
  ck.config = {{"kind", "fusion_model_int8"},
               {"architecture", architecture_json(q.arch)},
               {"dropout_rate", q.dropout_rate},
               {"train_config", q.hyper}};
  for (const auto& t : q.tensors) {
    io::Entry e;
    e.name = t.name;
    e.dtype = io::DType::i8;
    e.shape = {static_cast<std::uint64_t>(t.rows), static_cast<std::uint64_t>(t.cols)};
    e.scale = t.scale;
    e.zero_point = t.zero_point;
    for (Index r = 0; r < t.rows; ++r)
      for (Index c = 0; c < t.cols; ++c) e.i8.push_back(t.q[static_cast<std::size_t>(c * t.rows + r)]);
    ck.entries.push_back(std::move(e));
  }
  return ck;
}

inline QuantizedModel quantized_from_checkpoint(const io::Checkpoint& ck) {
  require(ck.config.value("kind", "") == "fusion_model_int8", "checkpoint is not a quantized model");
  QuantizedModel q;
  q.arch = architecture_from_json(ck.config.at("architecture"));
  q.dropout_rate = ck.config.at("dropout_rate").get<double>();
  q.hyper = ck.config.at("train_config").get<TrainConfig>();
  for (const auto& e : ck.entries) {
    require(e.dtype == io::DType::i8 && e.shape.size() == 2, "entry \"", e.name, "\" is not an int8 matrix");
    QuantizedTensor t;
    t.name = e.name;
    t.rows = static_cast<Index>(e.shape[0]);
    t.cols = static_cast<Index>(e.shape[1]);
    t.scale = e.scale;
    t.zero_point = e.zero_point;
    t.q.resize(e.i8.size());
    for (Index r = 0; r < t.rows; ++r)
      for (Index c = 0; c < t.cols; ++c)
        t.q[static_cast<std::size_t>(c * t.rows + r)] = e.i8[static_cast<std::size_t>(r * t.cols + c)];
    q.tensors.push_back(std::move(t));
  }
  return q;
}

// Accepts both full-precision and int8 checkpoints; the latter are dequantized.
inline FusionModel model_from_checkpoint(const io::Checkpoint& ck) {
  const std::string kind = ck.config.value("kind", "");
  if (kind == "fusion_model_int8") return dequantize(quantized_from_checkpoint(ck));
  require(kind == "fusion_model", "checkpoint kind \"", kind, "\" is not a model");
  FusionModel m = FusionModel::zeros(architecture_from_json(ck.config.at("architecture")));
  m.dropout_rate = ck.config.at("dropout_rate").get<double>();
  m.hyper = ck.config.at("train_config").get<TrainConfig>();
  visit_tensors(m.params, [&](const std::string& name, MatrixXd& t) {
    const io::Entry& e = ck.at(name);
    require(e.dtype == io::DType::f64 && e.shape.size() == 2 && static_cast<Index>(e.shape[0]) == t.rows() &&
                static_cast<Index>(e.shape[1]) == t.cols(),
            "entry \"", name, "\" has wrong type or shape");
    for (Index r = 0; r < t.rows(); ++r)
      for (Index c = 0; c < t.cols(); ++c) t(r, c) = e.f64[static_cast<std::size_t>(r * t.cols() + c)];
  });
  return m;
}

inline void save_model(const FusionModel& m, const std::string& path) { io::save(to_checkpoint(m), path); }
inline FusionModel load_model(const std::string& path) { return model_from_checkpoint(io::load(path)); }

}  // namespace glycopipe::model
