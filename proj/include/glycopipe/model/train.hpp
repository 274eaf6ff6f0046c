// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "glycopipe/common.hpp"
#include "glycopipe/model/config.hpp"
#include "glycopipe/model/fusion.hpp"
#include "glycopipe/model/metrics.hpp"
#include "glycopipe/privacy/dp.hpp"

namespace glycopipe::model {

struct EpochRecord {
  std::size_t epoch = 0;   // 1-based
  double train_loss = 0.0; // mean BCE over the epoch's minibatches
  double val_auc = 0.5;
};

struct TrainResult {
  FusionModel model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

struct DataSplit {
  Dataset train;
  Dataset validation;
};

// Seeded shuffle, then the last `fraction` of rows become validation.
inline DataSplit split_dataset(const Dataset& data, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(seed, 0x5b1);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
  const auto n_val = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(data.size())));
  DataSplit s;
  for (std::size_t k = 0; k < idx.size(); ++k) (k < idx.size() - n_val ? s.train : s.validation).push_back(data[idx[k]]);
  return s;
}

// Sum (not mean) of per-example gradients over rows [begin, end) in eval mode;
// used where exact decomposition over shards matters.
inline VectorXd gradient_sum(const FusionModel& model, const Dataset& data, std::span<const std::size_t> rows,
                             double* loss_sum = nullptr) {
  Gradients g;
  g.params = FusionParams::zeros(model.arch);
  double loss = 0.0;
  for (auto r : rows) {
    backward_into(model, forward_trace(model, data[r]), data[r].label, g);
    loss += g.loss;
  }
  if (loss_sum) *loss_sum = loss;
  return flatten(g.params);
}

// One optimizer instance per run; state is a pair of flat moment vectors.
class OptimizerState {
 public:
  OptimizerState(const TrainConfig& cfg, Index size) : cfg_(cfg), m_(VectorXd::Zero(size)), v_(VectorXd::Zero(size)) {}

  void apply(VectorXd& params, const VectorXd& grad) {
    if (cfg_.optimizer == Optimizer::sgd) {
      params -= cfg_.learning_rate * grad;
      return;
    }
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    params.array() -= cfg_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.adam_epsilon);
  }

 private:
  TrainConfig cfg_;
  VectorXd m_, v_;
  std::size_t t_ = 0;
};

// Epoch-at-a-time trainer; train() drives it to completion and the tuner
// drives it one epoch per scheduler step.
class Trainer {
 public:
  Trainer(Dataset train, Dataset validation, const TrainConfig& cfg)
      : train_(std::move(train)), val_(std::move(validation)), cfg_(cfg) {
    cfg_.validate();
    require(!train_.empty(), "training data is empty");
    std::size_t pos = 0;
    for (const auto& ex : train_) {
      require(ex.label == 0 || ex.label == 1, "labels must be binary");
      pos += static_cast<std::size_t>(ex.label);
    }
    require(pos > 0 && pos < train_.size(), "training labels contain a single class");
    const auto& first = train_.front();
    model_ = FusionModel::initialize(
        Architecture::from(cfg_, static_cast<std::size_t>(first.statics.size()), static_cast<std::size_t>(first.series.cols())),
        cfg_);
    flat_ = flatten(model_.params);
    opt_.emplace(cfg_, flat_.size());
    rng_ = make_rng(cfg_.seed, 0x7a1);
    best_ = model_;
  }

  const FusionModel& model() const { return model_; }
  const FusionModel& best_model() const { return best_; }
  const std::vector<EpochRecord>& history() const { return history_; }
  std::size_t best_epoch() const { return best_epoch_; }
  std::size_t epochs_done() const { return history_.size(); }
  bool stopped_early() const { return stopped_; }

  const EpochRecord& run_epoch() {
    std::vector<std::size_t> order(train_.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng_, i)]);

    const auto P = static_cast<Index>(flat_.size());
    Gradients g;
    g.params = FusionParams::zeros(model_.arch);
    MatrixXd per_example;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
      const auto B = static_cast<Index>(end - start);
      VectorXd grad;
      if (cfg_.dp.enabled) {
        per_example.resize(B, P);
        for (std::size_t k = start; k < end; ++k) {
          g.params = FusionParams::zeros(model_.arch);
          const Example& ex = train_[order[k]];
          backward_into(model_, forward_trace(model_, ex, Mode::train, &rng_), ex.label, g);
          loss_sum += g.loss;
          per_example.row(static_cast<Index>(k - start)) = flatten(g.params).transpose();
        }
        grad = privacy::dpsgd_sanitize(per_example, cfg_.dp.clip_norm, cfg_.dp.noise_multiplier, rng_);
      } else {
        g.params = FusionParams::zeros(model_.arch);
        for (std::size_t k = start; k < end; ++k) {
          const Example& ex = train_[order[k]];
          backward_into(model_, forward_trace(model_, ex, Mode::train, &rng_), ex.label, g);
          loss_sum += g.loss;
        }
        grad = flatten(g.params) / static_cast<double>(B);
      }
      opt_->apply(flat_, grad);
      unflatten(flat_, model_.params);
    }

    EpochRecord rec;
    rec.epoch = history_.size() + 1;
    rec.train_loss = loss_sum / static_cast<double>(train_.size());
    rec.val_auc = val_.empty() ? 0.5 : evaluate(model_, val_).auc;
    history_.push_back(rec);
    if (history_.size() == 1 || rec.val_auc > best_auc_) {
      best_auc_ = rec.val_auc;
      best_ = model_;
      best_epoch_ = rec.epoch;
      since_best_ = 0;
    } else {
      ++since_best_;
      if (cfg_.patience > 0 && since_best_ >= cfg_.patience) stopped_ = true;
    }
    return history_.back();
  }

 private:
  Dataset train_, val_;
  TrainConfig cfg_;
  FusionModel model_, best_;
  VectorXd flat_;
  std::optional<OptimizerState> opt_;
  Rng rng_;
  std::vector<EpochRecord> history_;
  double best_auc_ = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  bool stopped_ = false;
};

// When validation is empty and validation_fraction > 0 the data is split by a
// seeded shuffle. With patience > 0 training stops early and the weights from
// the best validation epoch are returned; otherwise the final weights are.
inline TrainResult train(const Dataset& data, const TrainConfig& cfg, const Dataset& validation = {}) {
  cfg.validate();
  require(!data.empty(), "training data is empty");
  Dataset tr = data, val = validation;
  if (validation.empty() && cfg.validation_fraction > 0.0) {
    DataSplit s = split_dataset(data, cfg.validation_fraction, cfg.seed);
    tr = std::move(s.train);
    val = std::move(s.validation);
  }
  Trainer trainer(std::move(tr), std::move(val), cfg);
  for (std::size_t e = 0; e < cfg.epochs && !trainer.stopped_early(); ++e) trainer.run_epoch();
  TrainResult result;
  result.history = trainer.history();
  result.best_epoch = trainer.best_epoch();
  result.model = cfg.patience > 0 && trainer.epochs_done() > 0 ? trainer.best_model() : trainer.model();
  return result;
}

}  // namespace glycopipe::model
