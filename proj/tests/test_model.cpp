// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "glycopipe/glycopipe.hpp"
#include "oracles.hpp"

namespace gp = glycopipe;
namespace md = glycopipe::model;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

md::TrainConfig quick_config(std::uint64_t seed = 1) {
  md::TrainConfig cfg;
  cfg.seed = seed;
  cfg.learning_rate = 0.02;
  cfg.batch_size = 16;
  cfg.epochs = 40;
  cfg.lstm_layers = 1;
  cfg.hidden_size = 4;
  cfg.mlp_hidden = {4};
  cfg.dropout_rate = 0.0;
  cfg.validation_fraction = 0.0;
  return cfg;
}

// Classes sit six standard deviations apart on the first static feature.
md::Dataset wide_margin_dataset(std::size_t n, std::uint64_t seed) {
  gp::Rng rng = gp::make_rng(seed, 9);
  md::Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    md::Example x;
    x.label = static_cast<int>(i % 2);
    x.statics = VectorXd::Zero(2);
    x.statics(0) = gp::standard_normal(rng) * 0.5 + (x.label ? 1.5 : -1.5);
    x.statics(1) = gp::standard_normal(rng);
    x.series = MatrixXd::Zero(3, 1);
    for (Eigen::Index t = 0; t < 3; ++t) x.series(t, 0) = gp::standard_normal(rng);
    d.push_back(std::move(x));
  }
  return d;
}

double mean_loss(const md::FusionModel& m, const md::Dataset& d) {
  double s = 0.0;
  for (const auto& x : d) s += md::bce_loss(md::forward_trace(m, x).logit, x.label);
  return s / static_cast<double>(d.size());
}

}  // namespace

TEST(Lstm, ZeroParametersKeepZeroState) {
  const auto layer = md::LstmLayerParams::zeros(2, 3);
  const auto cache = md::lstm_forward(layer, MatrixXd::Zero(5, 2), VectorXd::Zero(3), VectorXd::Zero(3));
  EXPECT_TRUE(cache.H.isZero(0.0));
  EXPECT_EQ(cache.H.rows(), 5);
}

TEST(Lstm, SingleTimestep) {
  gp::Rng rng = gp::make_rng(3);
  const auto a = fixtures::small_arch();
  const auto m = fixtures::random_model(a, 3);
  const auto x = fixtures::random_example(a, 1, rng);
  const auto tr = md::forward_trace(m, x);
  ASSERT_EQ(tr.attn.weights.size(), 1);
  EXPECT_DOUBLE_EQ(tr.attn.weights(0), 1.0);
  EXPECT_GT(tr.probability, 0.0);
  EXPECT_LT(tr.probability, 1.0);
}

TEST(Attention, ZeroScoringVectorGivesUniformWeights) {
  md::AttentionParams p{MatrixXd::Zero(3, 1), MatrixXd::Zero(1, 1)};
  gp::Rng rng = gp::make_rng(4);
  MatrixXd H(6, 3);
  for (Eigen::Index k = 0; k < H.size(); ++k) H.data()[k] = gp::standard_normal(rng);
  const auto r = md::attention_pool(H, p);
  for (Eigen::Index t = 0; t < 6; ++t) EXPECT_NEAR(r.weights(t), 1.0 / 6.0, 1e-15);
}

TEST(Attention, BiasShiftLeavesWeightsUnchanged) {
  gp::Rng rng = gp::make_rng(5);
  md::AttentionParams p{MatrixXd(4, 1), MatrixXd::Zero(1, 1)};
  for (Eigen::Index k = 0; k < 4; ++k) p.v(k, 0) = gp::standard_normal(rng);
  MatrixXd H(7, 4);
  for (Eigen::Index k = 0; k < H.size(); ++k) H.data()[k] = gp::standard_normal(rng);
  const auto a = md::attention_pool(H, p);
  p.bias(0, 0) = 123.0;
  const auto b = md::attention_pool(H, p);
  EXPECT_NEAR(a.weights.sum(), 1.0, 1e-14);
  EXPECT_LT((a.weights - b.weights).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Fusion, ZeroModelPredictsHalf) {
  const auto a = fixtures::small_arch();
  gp::Rng rng = gp::make_rng(6);
  EXPECT_DOUBLE_EQ(md::predict(md::FusionModel::zeros(a), fixtures::random_example(a, 4, rng)), 0.5);
}

TEST(Fusion, ZeroDropoutTrainModeEqualsEval) {
  const auto a = fixtures::small_arch();
  const auto m = fixtures::random_model(a, 7, 0.0);
  gp::Rng rng = gp::make_rng(7);
  const auto x = fixtures::random_example(a, 5, rng);
  EXPECT_EQ(md::forward_trace(m, x, md::Mode::train, &rng).logit, md::forward_trace(m, x).logit);
}

TEST(Fusion, WidthMismatchRejected) {
  const auto a = fixtures::small_arch(3);
  const auto m = fixtures::random_model(a, 8);
  gp::Rng rng = gp::make_rng(8);
  auto x = fixtures::random_example(fixtures::small_arch(4), 5, rng);
  EXPECT_THROW(md::forward_trace(m, x), gp::Error);
}

TEST(Fusion, SaturatedCorrectPredictionHasNearZeroGradient) {
  const auto a = fixtures::small_arch();
  auto m = fixtures::random_model(a, 9);
  m.params.head.b(0, 0) = 50.0;
  gp::Rng rng = gp::make_rng(9);
  auto x = fixtures::random_example(a, 4, rng);
  x.label = 1;
  const auto g = md::backward(m, md::forward_trace(m, x), 1);
  EXPECT_LT(md::flatten(g.params).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(g.loss, 1e-15);
}

TEST(Fusion, SingleLayerLstmParameterCount) {
  const auto layer = md::LstmLayerParams::zeros(3, 4);
  EXPECT_EQ(layer.W.size() + layer.U.size() + layer.b.size(), 128);
}

TEST(Fusion, LossFiniteForExtremeLogits) {
  EXPECT_TRUE(std::isfinite(md::bce_loss(800.0, 0)));
  EXPECT_TRUE(std::isfinite(md::bce_loss(-800.0, 1)));
  EXPECT_NEAR(md::bce_loss(800.0, 0), 800.0, 1e-9);
  EXPECT_NEAR(md::bce_loss(0.0, 1), std::log(2.0), 1e-15);
}

TEST(Fusion, ParameterGradientMatchesFiniteDifference) {
  const auto a = fixtures::small_arch(2, 3, 2, {3});
  const auto m = fixtures::random_model(a, 10);
  gp::Rng rng = gp::make_rng(10);
  const auto x = fixtures::random_example(a, 4, rng);
  const VectorXd theta = md::flatten(m.params);
  auto loss = [&](const VectorXd& t) {
    md::FusionModel copy = m;
    md::unflatten(t, copy.params);
    return md::bce_loss(md::forward_trace(copy, x).logit, x.label);
  };
  const VectorXd analytic = md::flatten(md::backward(m, md::forward_trace(m, x), x.label).params);
  EXPECT_LT(oracle::max_relative_error(analytic, oracle::central_difference(loss, theta)), 1e-5);
}

TEST(Train, WideMarginReachesLowLoss) {
  const auto data = wide_margin_dataset(200, 11);
  const auto r = md::train(data, quick_config());
  EXPECT_LT(mean_loss(r.model, data), 0.1);
  EXPECT_EQ(r.history.size(), 40u);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const auto data = wide_margin_dataset(50, 12);
  auto cfg = quick_config(12);
  cfg.epochs = 0;
  const auto r = md::train(data, cfg);
  const auto init = md::FusionModel::initialize(md::Architecture::from(cfg, 2, 1), cfg);
  EXPECT_EQ(md::flatten(r.model.params), md::flatten(init.params));
  EXPECT_TRUE(r.history.empty());
}

TEST(Train, SameSeedSameWeights) {
  const auto data = fixtures::separable_dataset(120, 3, 4, 13);
  auto cfg = quick_config(13);
  cfg.epochs = 5;
  cfg.dropout_rate = 0.3;
  cfg.validation_fraction = 0.25;
  cfg.patience = 2;
  EXPECT_EQ(md::flatten(md::train(data, cfg).model.params), md::flatten(md::train(data, cfg).model.params));
  auto other = cfg;
  other.seed = 14;
  EXPECT_NE(md::flatten(md::train(data, cfg).model.params), md::flatten(md::train(data, other).model.params));
}

TEST(Train, SingleClassRejected) {
  auto data = wide_margin_dataset(20, 15);
  for (auto& x : data) x.label = 1;
  EXPECT_THROW(md::train(data, quick_config()), gp::Error);
}

TEST(Train, InvalidConfigRejected) {
  const auto data = wide_margin_dataset(20, 16);
  auto cfg = quick_config();
  cfg.dropout_rate = 1.0;
  EXPECT_THROW(md::train(data, cfg), gp::Error);
}

TEST(Metrics, FourPointExample) {
  const std::vector<double> s{0.9, 0.4, 0.6, 0.1};
  const std::vector<int> y{1, 1, 0, 0};
  const auto m = md::metrics_from_scores(s, y);
  EXPECT_DOUBLE_EQ(m.sensitivity, 0.5);
  EXPECT_DOUBLE_EQ(m.specificity, 0.5);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(m.auc, 0.75);
}

TEST(Metrics, ConstantScoreAucIsHalf) {
  const std::vector<double> s(10, 0.3);
  const std::vector<int> y{1, 0, 1, 0, 0, 0, 1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(md::roc_auc(s, y), 0.5);
}

TEST(Metrics, AucMatchesPairCounting) {
  gp::Rng rng = gp::make_rng(17);
  std::vector<double> s(300);
  std::vector<int> y(300);
  for (std::size_t i = 0; i < s.size(); ++i) {
    y[i] = gp::uniform01(rng) < 0.4;
    s[i] = std::round(10 * (gp::standard_normal(rng) + y[i])) / 10;  // rounding forces ties
  }
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
  EXPECT_NEAR(md::roc_auc(s, y), wins / pairs, 1e-12);
}

TEST(Quantize, PerTensorErrorBound) {
  const auto m = fixtures::random_model(fixtures::small_arch(4, 5, 2, {6, 3}), 18);
  const auto q = md::quantize_int8(m);
  const auto back = md::dequantize(q);
  std::size_t k = 0;
  std::vector<MatrixXd> originals;
  md::visit_tensors(m.params, [&](const std::string&, const MatrixXd& t) { originals.push_back(t); });
  md::visit_tensors(back.params, [&](const std::string& name, const MatrixXd& t) {
    EXPECT_EQ(q.tensors[k].name, name);
    EXPECT_LE((t - originals[k]).cwiseAbs().maxCoeff(), q.tensors[k].scale / 2 + 1e-15) << name;
    ++k;
  });
  EXPECT_DOUBLE_EQ(md::quantized_size_ratio(q), 0.25);
}

TEST(Quantize, TrainedModelKeepsAuc) {
  const auto data = fixtures::separable_dataset(300, 3, 4, 19);
  auto cfg = quick_config(19);
  cfg.epochs = 15;
  const auto m = md::train(data, cfg).model;
  const double full = md::evaluate(m, data).auc;
  const double q = md::evaluate(md::dequantize(md::quantize_int8(m)), data).auc;
  EXPECT_LE(std::abs(full - q), 0.02);
}

TEST(Serialize, CheckpointRoundTripIsBitExact) {
  const auto m = fixtures::random_model(fixtures::small_arch(), 20, 0.25);
  const std::string bytes = gp::io::serialize(md::to_checkpoint(m));
  EXPECT_EQ(bytes.substr(0, 4), "GLYC");
  const auto back = md::model_from_checkpoint(gp::io::deserialize(bytes));
  EXPECT_EQ(md::flatten(back.params), md::flatten(m.params));
  EXPECT_TRUE(back.arch == m.arch);
  EXPECT_EQ(back.dropout_rate, m.dropout_rate);
  EXPECT_EQ(gp::io::serialize(md::to_checkpoint(back)), bytes);

  const auto q = md::quantize_int8(m);
  const auto qb = md::quantized_from_checkpoint(gp::io::deserialize(gp::io::serialize(md::to_checkpoint(q))));
  EXPECT_EQ(md::flatten(md::dequantize(qb).params), md::flatten(md::dequantize(q).params));
}

TEST(Serialize, CorruptMagicRejected) {
  std::string bytes = gp::io::serialize(md::to_checkpoint(fixtures::random_model(fixtures::small_arch(), 21)));
  bytes[0] = 'X';
  EXPECT_THROW(gp::io::deserialize(bytes), gp::Error);
  EXPECT_THROW(gp::io::deserialize(bytes.substr(0, 10)), gp::Error);
}
