// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "glycopipe/checkpoint.hpp"
#include "glycopipe/data/cohort.hpp"
#include "glycopipe/model/fusion.hpp"
#include "glycopipe/preprocess/feature_matrix.hpp"
#include "glycopipe/preprocess/forest.hpp"
#include "glycopipe/preprocess/transforms.hpp"

namespace glycopipe::preprocess {

struct PreprocessConfig {
  std::size_t select_k = 0;  // 0 keeps every static column
  std::size_t pca_k = 3;     // 0 skips PCA
  ForestConfig forest;
};

inline void to_json(nlohmann::json& j, const PreprocessConfig& c) {
  j = {{"select_k", c.select_k},
       {"pca_k", c.pca_k},
       {"forest",
        {{"n_trees", c.forest.n_trees},
         {"max_depth", c.forest.max_depth},
         {"min_samples_leaf", c.forest.min_samples_leaf},
         {"seed", c.forest.seed}}}};
}

inline void from_json(const nlohmann::json& j, PreprocessConfig& c) {
  c.select_k = j.value("select_k", c.select_k);
  c.pca_k = j.value("pca_k", c.pca_k);
  if (j.contains("forest")) {
    const auto& f = j.at("forest");
    c.forest.n_trees = f.value("n_trees", c.forest.n_trees);
    c.forest.max_depth = f.value("max_depth", c.forest.max_depth);
    c.forest.min_samples_leaf = f.value("min_samples_leaf", c.forest.min_samples_leaf);
    c.forest.seed = f.value("seed", c.forest.seed);
  }
}

// Statics: impute -> standardize -> keep the top-k by forest importance ->
// PCA. The glucose series is imputed with and standardized by its pooled
// mean and standard deviation.
struct PreprocessState {
  std::vector<std::string> static_names;
  std::size_t series_length = 0;
  ImputerModel imputer;
  ScalerModel scaler;
  ImportanceRanking ranking;
  std::vector<std::size_t> selected;  // columns of static_names, best first
  bool use_pca = false;
  PcaModel pca;
  double series_mean = 0.0;
  double series_sd = 1.0;

  std::size_t model_static_dim() const { return use_pca ? static_cast<std::size_t>(pca.components.rows()) : selected.size(); }

  // Raw static values with missing cells imputed, followed by the raw series
  // with missing days set to the pooled series mean.
  Eigen::VectorXd raw_vector(const data::PatientRecord& r) const {
    require(r.statics.size() == static_names.size() && r.glucose_series.size() == series_length,
            "record \"", r.patient_id, "\" does not match the fitted layout");
    Eigen::VectorXd v(static_cast<Eigen::Index>(static_names.size() + series_length));
    for (std::size_t j = 0; j < static_names.size(); ++j)
      v(static_cast<Eigen::Index>(j)) = r.static_missing[j] ? imputer.means(static_cast<Eigen::Index>(j)) : r.statics[j];
    for (std::size_t t = 0; t < series_length; ++t)
      v(static_cast<Eigen::Index>(static_names.size() + t)) = r.series_missing[t] ? series_mean : r.glucose_series[t];
    return v;
  }

  model::Example example_from_raw(const Eigen::VectorXd& raw, int label = 0) const {
    const auto ns = static_cast<Eigen::Index>(static_names.size());
    require(raw.size() == ns + static_cast<Eigen::Index>(series_length), "raw vector has wrong length");
    Eigen::VectorXd sel(static_cast<Eigen::Index>(selected.size()));
    for (std::size_t k = 0; k < selected.size(); ++k) {
      const auto j = static_cast<Eigen::Index>(selected[k]);
      const double sd = scaler.stddev(j);
      sel(static_cast<Eigen::Index>(k)) = sd > 0.0 ? (raw(j) - scaler.mean(j)) / sd : 0.0;
    }
    model::Example ex;
    ex.statics = use_pca ? Eigen::VectorXd(pca.components * (sel - pca.mean)) : sel;
    ex.series.resize(static_cast<Eigen::Index>(series_length), 1);
    for (std::size_t t = 0; t < series_length; ++t)
      ex.series(static_cast<Eigen::Index>(t), 0) = (raw(ns + static_cast<Eigen::Index>(t)) - series_mean) / series_sd;
    ex.label = label;
    return ex;
  }

  model::Example transform(const data::PatientRecord& r) const { return example_from_raw(raw_vector(r), r.label.value_or(0)); }

  model::Dataset transform(const std::vector<data::PatientRecord>& records) const {
    model::Dataset out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(transform(r));
    return out;
  }
};

// Imputation, standardization and the series statistics. The result keeps
// every static column and applies no PCA.
inline PreprocessState fit_cleaning(const std::vector<data::PatientRecord>& records) {
  require(!records.empty(), "no records to fit");
  PreprocessState s;
  s.static_names = records.front().static_names;
  s.series_length = records.front().glucose_series.size();
  const FeatureMatrix raw = from_records(records, false);
  s.imputer = fit_imputer(raw);
  s.scaler = fit_scaler(apply_imputer(s.imputer, raw));
  for (std::size_t j = 0; j < s.static_names.size(); ++j) s.selected.push_back(j);

  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& r : records)
    for (std::size_t t = 0; t < r.glucose_series.size(); ++t)
      if (!r.series_missing[t]) {
        sum += r.glucose_series[t];
        ++n;
      }
  require(n > 0, "glucose series has no present values");
  s.series_mean = sum / static_cast<double>(n);
  for (const auto& r : records)
    for (std::size_t t = 0; t < r.glucose_series.size(); ++t)
      if (!r.series_missing[t]) sq += (r.glucose_series[t] - s.series_mean) * (r.glucose_series[t] - s.series_mean);
  const double sd = std::sqrt(sq / static_cast<double>(n));
  s.series_sd = sd > 0.0 ? sd : 1.0;
  return s;
}

// Forest ranking on the standardized statics, top-k selection, then PCA on
// the selected columns.
inline PreprocessState fit_feature_engineering(PreprocessState s, const std::vector<data::PatientRecord>& records,
                                               const PreprocessConfig& cfg) {
  require(!records.empty(), "no records to fit");
  std::vector<int> y;
  for (const auto& r : records) {
    require(r.label.has_value(), "record \"", r.patient_id, "\" has no label");
    y.push_back(*r.label);
  }
  const FeatureMatrix scaled = apply_scaler(s.scaler, apply_imputer(s.imputer, from_records(records, false)));
  s.ranking = rf_importance(scaled, y, cfg.forest);
  const std::size_t k = cfg.select_k == 0 ? s.static_names.size() : cfg.select_k;
  s.selected = select_top_k(s.ranking, k);
  s.use_pca = cfg.pca_k > 0;
  if (s.use_pca) s.pca = fit_pca(scaled.select_columns(s.selected), static_cast<Eigen::Index>(cfg.pca_k));
  return s;
}

inline PreprocessState fit_preprocess(const std::vector<data::PatientRecord>& records, const PreprocessConfig& cfg) {
  return fit_feature_engineering(fit_cleaning(records), records, cfg);
}

namespace detail {

inline io::Entry f64_entry(const std::string& name, const Eigen::MatrixXd& m) {
  io::Entry e;
  e.name = name;
  e.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) e.f64.push_back(m(r, c));
  return e;
}

inline Eigen::MatrixXd f64_matrix(const io::Entry& e) {
  require(e.dtype == io::DType::f64 && e.shape.size() == 2, "entry \"", e.name, "\" is not an f64 matrix");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(e.shape[0]), static_cast<Eigen::Index>(e.shape[1]));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = e.f64[static_cast<std::size_t>(r * m.cols() + c)];
  return m;
}

}  // namespace detail

inline io::Checkpoint to_checkpoint(const PreprocessState& s) {
  io::Checkpoint ck;
  nlohmann::json ranking = nlohmann::json::array();
  for (const auto& e : s.ranking.entries) ranking.push_back({{"name", e.name}, {"column", e.column}, {"score", e.score}});
  ck.config = {{"kind", "preprocess_state"}, {"static_names", s.static_names}, {"series_length", s.series_length},
               {"selected", s.selected},     {"use_pca", s.use_pca},           {"ranking", ranking},
               {"series_mean", s.series_mean}, {"series_sd", s.series_sd}};
  ck.entries.push_back(detail::f64_entry("imputer.means", s.imputer.means));
  ck.entries.push_back(detail::f64_entry("scaler.mean", s.scaler.mean));
  ck.entries.push_back(detail::f64_entry("scaler.stddev", s.scaler.stddev));
  if (s.use_pca) {
    ck.entries.push_back(detail::f64_entry("pca.mean", s.pca.mean));
    ck.entries.push_back(detail::f64_entry("pca.components", s.pca.components));
    ck.entries.push_back(detail::f64_entry("pca.explained_variance", s.pca.explained_variance));
    ck.entries.push_back(detail::f64_entry("pca.all_eigenvalues", s.pca.all_eigenvalues));
  }
  return ck;
}

inline PreprocessState preprocess_from_checkpoint(const io::Checkpoint& ck) {
  require(ck.config.value("kind", "") == "preprocess_state", "checkpoint is not a preprocessing state");
  PreprocessState s;
  s.static_names = ck.config.at("static_names").get<std::vector<std::string>>();
  s.series_length = ck.config.at("series_length").get<std::size_t>();
  s.selected = ck.config.at("selected").get<std::vector<std::size_t>>();
  s.use_pca = ck.config.at("use_pca").get<bool>();
  s.series_mean = ck.config.at("series_mean").get<double>();
  s.series_sd = ck.config.at("series_sd").get<double>();
  for (const auto& e : ck.config.at("ranking"))
    s.ranking.entries.push_back({e.at("name").get<std::string>(), e.at("column").get<std::size_t>(), e.at("score").get<double>()});
  s.imputer.means = detail::f64_matrix(ck.at("imputer.means"));
  s.scaler.mean = detail::f64_matrix(ck.at("scaler.mean"));
  s.scaler.stddev = detail::f64_matrix(ck.at("scaler.stddev"));
  if (s.use_pca) {
    s.pca.mean = detail::f64_matrix(ck.at("pca.mean"));
    s.pca.components = detail::f64_matrix(ck.at("pca.components"));
    s.pca.explained_variance = detail::f64_matrix(ck.at("pca.explained_variance"));
    s.pca.all_eigenvalues = detail::f64_matrix(ck.at("pca.all_eigenvalues"));
  }
  for (auto j : s.selected) require(j < s.static_names.size(), "selected column out of range");
  return s;
}

}  // namespace glycopipe::preprocess
