// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "glycopipe/common.hpp"

namespace glycopipe::model {

enum class Optimizer { sgd, adam };

// Per-example clipping plus Gaussian noise applied to every minibatch
// gradient when enabled.
struct DpSgdOptions {
  bool enabled = false;
  double clip_norm = 1.0;
  double noise_multiplier = 0.1;
};

struct TrainConfig {
  // Defaults are the tuned point: lr 0.00137, batch 128, 3 LSTM layers,
  // dropout 0.32.
  double learning_rate = 0.00137;
  std::size_t batch_size = 128;
  std::size_t epochs = 20;
  std::size_t lstm_layers = 3;
  std::size_t hidden_size = 32;
  std::vector<std::size_t> mlp_hidden{16};
  double dropout_rate = 0.32;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Stop after this many epochs without validation AUC improvement and
  // restore the best weights; 0 disables early stopping.
  std::size_t patience = 0;
  double validation_fraction = 0.2;
  DpSgdOptions dp;

  // Starting point of the tuning table: lr 0.01, batch 32, 2 layers, dropout 0.5.
  static TrainConfig initial_preset() {
    TrainConfig c;
    c.learning_rate = 0.01;
    c.batch_size = 32;
    c.lstm_layers = 2;
    c.dropout_rate = 0.5;
    return c;
  }

  static TrainConfig tuned_preset() { return TrainConfig{}; }

  void validate() const {
    require(learning_rate > 0.0, "learning_rate must be > 0");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate must lie in [0, 1)");
    require(lstm_layers >= 1, "lstm_layers must be >= 1");
    require(hidden_size >= 1, "hidden_size must be >= 1");
    require(validation_fraction >= 0.0 && validation_fraction < 1.0, "validation_fraction must lie in [0, 1)");
    if (dp.enabled) {
      require(dp.clip_norm > 0.0, "dp.clip_norm must be > 0");
      require(dp.noise_multiplier >= 0.0, "dp.noise_multiplier must be >= 0");
    }
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size},
                     {"epochs", c.epochs},
                     {"lstm_layers", c.lstm_layers},
                     {"hidden_size", c.hidden_size},
                     {"mlp_hidden", c.mlp_hidden},
                     {"dropout_rate", c.dropout_rate},
                     {"seed", c.seed},
                     {"optimizer", c.optimizer == Optimizer::adam ? "adam" : "sgd"},
                     {"beta1", c.beta1},
                     {"beta2", c.beta2},
                     {"adam_epsilon", c.adam_epsilon},
                     {"patience", c.patience},
                     {"validation_fraction", c.validation_fraction},
                     {"dp",
                      {{"enabled", c.dp.enabled},
                       {"clip_norm", c.dp.clip_norm},
                       {"noise_multiplier", c.dp.noise_multiplier}}}};
}

// Missing keys keep their defaults, so partial config documents are valid.
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("learning_rate", c.learning_rate);
  get("batch_size", c.batch_size);
  get("epochs", c.epochs);
  get("lstm_layers", c.lstm_layers);
  get("hidden_size", c.hidden_size);
  get("mlp_hidden", c.mlp_hidden);
  get("dropout_rate", c.dropout_rate);
  get("seed", c.seed);
  if (j.contains("optimizer")) {
    const auto name = j.at("optimizer").get<std::string>();
    require(name == "adam" || name == "sgd", "unknown optimizer \"", name, "\"");
    c.optimizer = name == "adam" ? Optimizer::adam : Optimizer::sgd;
  }
  get("beta1", c.beta1);
  get("beta2", c.beta2);
  get("adam_epsilon", c.adam_epsilon);
  get("patience", c.patience);
  get("validation_fraction", c.validation_fraction);
  if (j.contains("dp")) {
    const auto& d = j.at("dp");
    if (d.contains("enabled")) d.at("enabled").get_to(c.dp.enabled);
    if (d.contains("clip_norm")) d.at("clip_norm").get_to(c.dp.clip_norm);
    if (d.contains("noise_multiplier")) d.at("noise_multiplier").get_to(c.dp.noise_multiplier);
  }
}

}  // namespace glycopipe::model
