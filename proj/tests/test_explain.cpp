// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "glycopipe/glycopipe.hpp"
#include "oracles.hpp"

namespace gp = glycopipe;
namespace ex = glycopipe::explain;
namespace md = glycopipe::model;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  gp::Rng rng = gp::make_rng(seed, 3);
  MatrixXd X(n, d);
  for (Eigen::Index k = 0; k < X.size(); ++k) X.data()[k] = gp::standard_normal(rng);
  return X;
}

// Nonlinear toy with pairwise interactions over six features.
double toy(const VectorXd& z) {
  return gp::sigmoid(0.8 * z(0) - 0.5 * z(1) + 0.3 * z(2) * z(3) + 0.6 * z(4) * z(0) - 0.2 * z(5));
}

}  // namespace

TEST(Shapley, ExactMatchesPermutationEnumeration) {
  const MatrixXd bg = random_rows(6, 6, 1);
  const VectorXd x = random_rows(1, 6, 2).row(0).transpose();
  const auto a = ex::shapley_exact(toy, x, bg, ex::singleton_groups(6));
  const VectorXd ref = oracle::shapley_by_permutations(toy, x, bg);
  EXPECT_LT((a.phi - ref).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(a.phi.sum(), a.prediction - a.base_value, 1e-10);
}

TEST(Shapley, LinearClosedForm) {
  const VectorXd w = (VectorXd(4) << 1.5, -2.0, 0.25, 0.0).finished();
  auto f = [&](const VectorXd& z) { return w.dot(z); };
  const MatrixXd bg = random_rows(9, 4, 3);
  const VectorXd x = random_rows(1, 4, 4).row(0).transpose();
  const auto a = ex::shapley_exact(f, x, bg, ex::singleton_groups(4));
  const VectorXd mean = bg.colwise().mean().transpose();
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(a.phi(j), w(j) * (x(j) - mean(j)), 1e-12);
  EXPECT_EQ(a.phi(3), 0.0);
}

TEST(Shapley, SymmetricFeaturesGetEqualCredit) {
  auto f = [](const VectorXd& z) { return std::tanh(z(0) + z(1)) + 0.3 * z(2); };
  MatrixXd bg = random_rows(5, 3, 5);
  bg.col(1) = bg.col(0);
  VectorXd x(3);
  x << 0.7, 0.7, -1.0;
  const auto a = ex::shapley_exact(f, x, bg, ex::singleton_groups(3));
  EXPECT_NEAR(a.phi(0), a.phi(1), 1e-12);
}

TEST(Shapley, TooManyPlayersPointsToSampling) {
  const MatrixXd bg = random_rows(2, 13, 6);
  try {
    ex::shapley_exact([](const VectorXd& z) { return z.sum(); }, bg.row(0).transpose(), bg, ex::singleton_groups(13));
    FAIL() << "expected an error";
  } catch (const gp::Error& e) {
    EXPECT_NE(std::string(e.what()).find("sampling"), std::string::npos) << e.what();
  }
}

TEST(Shapley, GroupedPlayersMatchMergedFeature) {
  // Two columns that always move together behave as one player.
  auto f = [](const VectorXd& z) { return std::exp(0.3 * (z(0) + z(1))) * z(2); };
  const MatrixXd bg = random_rows(4, 3, 7);
  const VectorXd x = random_rows(1, 3, 8).row(0).transpose();
  const auto a = ex::shapley_exact(f, x, bg, {{0, 1}, {2}});
  EXPECT_EQ(a.phi.size(), 2);
  EXPECT_NEAR(a.phi.sum(), a.prediction - a.base_value, 1e-12);
}

TEST(Shapley, SamplingDeterministicPerSeed) {
  const MatrixXd bg = random_rows(5, 6, 9);
  const VectorXd x = random_rows(1, 6, 10).row(0).transpose();
  const auto a = ex::shapley_sample(toy, x, bg, ex::singleton_groups(6), 50, 3);
  const auto b = ex::shapley_sample(toy, x, bg, ex::singleton_groups(6), 50, 3);
  const auto c = ex::shapley_sample(toy, x, bg, ex::singleton_groups(6), 50, 4);
  EXPECT_EQ(a.phi, b.phi);
  EXPECT_NE(a.phi, c.phi);
  EXPECT_NEAR(a.phi.sum(), a.prediction - a.base_value, 1e-12);
}

TEST(Shapley, StandardErrorShrinksAsRootN) {
  const MatrixXd bg = random_rows(4, 6, 11);
  const VectorXd x = random_rows(1, 6, 12).row(0).transpose();
  const auto small = ex::shapley_sample(toy, x, bg, ex::singleton_groups(6), 100, 5);
  const auto large = ex::shapley_sample(toy, x, bg, ex::singleton_groups(6), 10000, 5);
  for (Eigen::Index j = 0; j < 6; ++j) {
    const double ratio = small.std_error(j) / large.std_error(j);
    EXPECT_GT(ratio, 7.0) << j;
    EXPECT_LT(ratio, 14.0) << j;
  }
}

TEST(Shapley, SamplingMeanOverSeedsApproachesExact) {
  const MatrixXd bg = random_rows(4, 6, 13);
  const VectorXd x = random_rows(1, 6, 14).row(0).transpose();
  const VectorXd exact = ex::shapley_exact(toy, x, bg, ex::singleton_groups(6)).phi;
  VectorXd mean = VectorXd::Zero(6), se2 = VectorXd::Zero(6);
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    const auto a = ex::shapley_sample(toy, x, bg, ex::singleton_groups(6), 40, static_cast<std::uint64_t>(s));
    mean += a.phi;
    se2 += a.std_error.cwiseAbs2();
  }
  mean /= seeds;
  for (Eigen::Index j = 0; j < 6; ++j) {
    const double se = std::sqrt(se2(j)) / seeds;
    EXPECT_LE(std::abs(mean(j) - exact(j)), 4 * se + 1e-12) << j;
  }
}

TEST(Shapley, ZeroModelAttributesNothing) {
  const auto a = fixtures::small_arch(4);
  const auto m = md::FusionModel::zeros(a);
  gp::Rng rng = gp::make_rng(15);
  const auto base = fixtures::random_example(a, 3, rng);
  auto f = [&](const VectorXd& z) {
    md::Example e = base;
    e.statics = z;
    return md::predict(m, e);
  };
  const MatrixXd bg = random_rows(3, 4, 15);
  const auto att = ex::shapley_exact(f, base.statics, bg, ex::singleton_groups(4));
  EXPECT_TRUE(att.phi.isZero(0.0));
}

TEST(MeanAbs, SingleRowEqualsAbsoluteAttribution) {
  const MatrixXd bg = random_rows(4, 6, 16);
  const MatrixXd X = random_rows(1, 6, 17);
  const std::vector<std::string> names{"a", "b", "c", "d", "e", "f"};
  const auto r = ex::mean_abs_attribution(toy, X, bg, ex::singleton_groups(6), names);
  const auto a = ex::shapley_exact(toy, X.row(0).transpose(), bg, ex::singleton_groups(6));
  for (const auto& e : r.entries) EXPECT_DOUBLE_EQ(e.score, std::abs(a.phi(static_cast<Eigen::Index>(e.column))));
}

TEST(MeanAbs, StrongestCohortFeatureRanksFirst) {
  std::size_t first = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    gp::data::CohortSpec spec;
    spec.n = 600;
    spec.seed = seed;
    spec.series_length = 1;
    const auto recs = gp::data::to_records(gp::data::generate_cohort(spec), gp::data::RecordSchema::for_cohort(spec));
    const auto raw = gp::preprocess::from_records(recs, false);
    const auto X = gp::preprocess::apply_scaler(gp::preprocess::fit_scaler(raw), raw).values;
    std::vector<int> y;
    for (const auto& r : recs) y.push_back(*r.label);
    const auto lr = gp::privacy::fit_logistic_regression(X, y, 1e-3);
    auto f = [&](const VectorXd& z) { return gp::sigmoid(lr.decision(z)); };
    std::vector<std::string> names;
    for (const auto& c : raw.columns) names.push_back(c.name);
    const auto ranking = ex::mean_abs_attribution(f, X.topRows(20), ex::sample_background(X, 16, seed),
                                                  ex::singleton_groups(X.cols()), names);
    first += ranking.entries.front().name == "fasting_glucose";
  }
  EXPECT_GE(first, 90u);
}

TEST(Background, SeededSubsetWithoutReplacement) {
  MatrixXd X(10, 1);
  for (int i = 0; i < 10; ++i) X(i, 0) = i;
  const MatrixXd a = ex::sample_background(X, 6, 1);
  EXPECT_EQ(a, ex::sample_background(X, 6, 1));
  std::vector<double> v(a.data(), a.data() + a.size());
  std::sort(v.begin(), v.end());
  EXPECT_EQ(std::unique(v.begin(), v.end()), v.end());
  EXPECT_EQ(ex::sample_background(X, 50, 1).rows(), 10);
}

TEST(Fgsm, ZeroEpsilonChangesNothing) {
  const auto a = fixtures::small_arch();
  const auto m = fixtures::random_model(a, 18);
  const auto data = fixtures::random_dataset(a, 40, 4, 18);
  EXPECT_DOUBLE_EQ(ex::fgsm_robustness(m, data, 0.0).unchanged_fraction, 1.0);
  EXPECT_THROW(ex::fgsm_robustness(m, data, -0.1), gp::Error);
}

TEST(Fgsm, UnchangedFractionFallsWithEpsilon) {
  const auto data = fixtures::separable_dataset(200, 3, 4, 19);
  md::TrainConfig cfg;
  cfg.seed = 19;
  cfg.epochs = 10;
  cfg.learning_rate = 0.02;
  cfg.batch_size = 16;
  cfg.lstm_layers = 1;
  cfg.hidden_size = 4;
  cfg.mlp_hidden = {4};
  cfg.dropout_rate = 0.0;
  cfg.validation_fraction = 0.0;
  const auto m = md::train(data, cfg).model;
  double prev = 1.0;
  for (double eps : {0.0, 0.1, 0.3, 0.6, 1.0, 2.0}) {
    const auto r = ex::fgsm_robustness(m, data, eps);
    EXPECT_LE(r.unchanged_fraction, prev + 1e-12) << eps;
    EXPECT_LE(r.adversarial_accuracy, r.clean_accuracy + 1e-12) << eps;
    prev = r.unchanged_fraction;
  }
  EXPECT_LT(prev, 1.0);
}

TEST(Fgsm, InputGradientMatchesFiniteDifference) {
  const auto a = fixtures::small_arch(3, 3, 2, {4});
  const auto m = fixtures::random_model(a, 20);
  gp::Rng rng = gp::make_rng(20);
  const auto x = fixtures::random_example(a, 5, rng);
  const auto g = md::backward(m, md::forward_trace(m, x), x.label);
  VectorXd flat(x.statics.size() + x.series.size());
  flat << x.statics, x.series.reshaped();
  auto loss = [&](const VectorXd& v) {
    md::Example e = x;
    e.statics = v.head(x.statics.size());
    e.series.reshaped() = v.tail(x.series.size());
    return md::bce_loss(md::forward_trace(m, e).logit, e.label);
  };
  VectorXd analytic(flat.size());
  analytic << g.d_statics, g.d_series.reshaped();
  EXPECT_LT(oracle::max_relative_error(analytic, oracle::central_difference(loss, flat)), 1e-4);
}

TEST(Heatmap, RowSumsToOneWithDayLabels) {
  const auto a = fixtures::small_arch();
  const auto m = fixtures::random_model(a, 21);
  gp::Rng rng = gp::make_rng(21);
  const auto h = ex::export_heatmap(m, fixtures::random_example(a, 7, rng));
  ASSERT_EQ(h.values.cols(), 7);
  EXPECT_NEAR(h.values.sum(), 1.0, 1e-12);
  EXPECT_EQ(h.col_labels.front(), "day-1");
  EXPECT_EQ(h.col_labels.back(), "day-7");
  std::ostringstream csv, svg;
  h.write_csv(csv);
  h.write_svg(svg);
  EXPECT_EQ(csv.str().substr(0, 15), "quantity,day-1,");
  EXPECT_NE(svg.str().find("<svg"), std::string::npos);
}

TEST(Heatmap, ConstantSeriesWithoutRecurrenceIsUniform) {
  // With U = 0 and the forget gate shut, every hidden state depends only on
  // the current input, so a constant series yields identical states.
  const auto a = fixtures::small_arch(3, 4, 2, {4});
  auto m = fixtures::random_model(a, 22);
  for (auto& layer : m.params.lstm) {
    layer.U.setZero();
    layer.b.block(layer.hidden(), 0, layer.hidden(), 1).setConstant(-800.0);
  }
  gp::Rng rng = gp::make_rng(22);
  auto x = fixtures::random_example(a, 6, rng);
  x.series.setConstant(1.7);
  const auto h = ex::export_heatmap(m, x);
  for (Eigen::Index t = 0; t < 6; ++t) EXPECT_NEAR(h.values(0, t), 1.0 / 6.0, 1e-12);
}
