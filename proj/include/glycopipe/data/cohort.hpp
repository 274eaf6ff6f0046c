// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glycopipe/common.hpp"
#include "glycopipe/data/table.hpp"

namespace glycopipe::data {

// Named clinical features carried by every synthetic record, in column order.
// Values are generated as mean + sd * z, where z is the latent standardized
// feature; the logit coefficients below act on z.
struct StaticFeature {
  const char* name;
  const char* unit;
  double mean;
  double sd;
};

inline constexpr StaticFeature kStaticFeatures[] = {
    {"fasting_glucose", "mg/dL", 100.0, 15.0},
    {"hba1c", "%", 5.6, 0.8},
    {"bmi", "kg/m2", 27.0, 5.0},
    {"age", "years", 50.0, 12.0},
    {"systolic_bp", "mmHg", 125.0, 15.0},
};
inline constexpr std::size_t kNamedFeatureCount = std::size(kStaticFeatures);

inline constexpr double kSeriesBaseline = 100.0;   // mg/dL
inline constexpr double kSeriesNoiseSd = 8.0;      // stationary sd of the AR(1) noise
inline constexpr double kSeriesAutocorr = 0.6;     // AR(1) coefficient

struct CohortSpec {
  std::size_t n = 1000;
  std::uint64_t seed = 42;
  double prevalence = 0.3;
  double missing_rate = 0.0;
  std::size_t n_noise_features = 3;
  // One coefficient per named feature (kStaticFeatures order).
  std::vector<double> effect_weights{1.3, 0.9, 0.7, 0.5, 0.4};
  // Size (mg/dL) of the upward ramp added to positive patients' series by
  // the last day.
  double series_signal = 11.0;
  std::size_t series_length = 7;

  void validate() const {
    require(prevalence >= 0.0 && prevalence <= 1.0, "prevalence must lie in [0, 1]");
    require(missing_rate >= 0.0 && missing_rate < 1.0, "missing_rate must lie in [0, 1)");
    require(series_length >= 1, "series_length must be >= 1");
    require(effect_weights.size() == kNamedFeatureCount, "effect_weights needs ",
            kNamedFeatureCount, " entries");
    for (double w : effect_weights) require(std::isfinite(w), "effect weight must be finite");
    require(std::isfinite(series_signal), "series_signal must be finite");
  }
};

inline std::string series_column(std::size_t day) {
  return "glucose_day_" + std::to_string(day + 1);
}

inline std::vector<std::string> cohort_header(const CohortSpec& spec) {
  std::vector<std::string> h{"patient_id"};
  for (const auto& f : kStaticFeatures) h.emplace_back(f.name);
  for (std::size_t k = 0; k < spec.n_noise_features; ++k) h.push_back("noise_" + std::to_string(k + 1));
  for (std::size_t t = 0; t < spec.series_length; ++t) h.push_back(series_column(t));
  h.emplace_back("label");
  return h;
}

namespace detail {

inline Eigen::VectorXd series_drift(const CohortSpec& spec) {
  const auto T = static_cast<Eigen::Index>(spec.series_length);
  Eigen::VectorXd d(T);
  for (Eigen::Index t = 0; t < T; ++t)
    d(t) = spec.series_signal * static_cast<double>(t + 1) / static_cast<double>(T);
  return d;
}

inline Eigen::MatrixXd series_covariance(std::size_t length) {
  const auto T = static_cast<Eigen::Index>(length);
  Eigen::MatrixXd cov(T, T);
  for (Eigen::Index a = 0; a < T; ++a)
    for (Eigen::Index b = 0; b < T; ++b)
      cov(a, b) = kSeriesNoiseSd * kSeriesNoiseSd * std::pow(kSeriesAutocorr, std::abs(a - b));
  return cov;
}

struct RowDraw {
  int label = 0;
  std::vector<double> latent;  // named features, standardized
  std::vector<double> noise;
  std::vector<double> series;
};

inline RowDraw draw_row(const CohortSpec& spec, Rng& rng) {
  RowDraw r;
  r.label = uniform01(rng) < spec.prevalence ? 1 : 0;
  for (std::size_t j = 0; j < kNamedFeatureCount; ++j)
    r.latent.push_back(r.label * spec.effect_weights[j] + standard_normal(rng));
  for (std::size_t k = 0; k < spec.n_noise_features; ++k) r.noise.push_back(standard_normal(rng));
  const double innov = kSeriesNoiseSd * std::sqrt(1.0 - kSeriesAutocorr * kSeriesAutocorr);
  const Eigen::VectorXd drift = series_drift(spec);
  double e = kSeriesNoiseSd * standard_normal(rng);
  for (std::size_t t = 0; t < spec.series_length; ++t) {
    if (t > 0) e = kSeriesAutocorr * e + innov * standard_normal(rng);
    r.series.push_back(kSeriesBaseline + e + r.label * drift(static_cast<Eigen::Index>(t)));
  }
  return r;
}

}  // namespace detail

// Squared Mahalanobis separation between the class-conditional feature laws.
inline double bayes_separation_sq(const CohortSpec& spec) {
  double s = 0.0;
  for (double w : spec.effect_weights) s += w * w;
  const Eigen::VectorXd d = detail::series_drift(spec);
  const Eigen::MatrixXd cov = detail::series_covariance(spec.series_length);
  s += d.dot(cov.ldlt().solve(d));
  return s;
}

// Both classes are Gaussian with a shared covariance, so the Bayes log-odds is
// linear and its class-conditional laws are N(+-delta^2/2, delta^2): the
// Bayes-optimal AUC is Phi(delta / sqrt 2), independent of prevalence.
inline double bayes_auc(const CohortSpec& spec) {
  return normal_cdf(std::sqrt(bayes_separation_sq(spec)) / std::sqrt(2.0));
}

// Exact posterior log-odds for a complete (unmasked) row.
inline double bayes_log_odds(const CohortSpec& spec, const std::vector<double>& named_values,
                             const std::vector<double>& series) {
  require(named_values.size() == kNamedFeatureCount, "expected ", kNamedFeatureCount, " named values");
  require(series.size() == spec.series_length, "series length mismatch");
  double prior = 0.0;
  if (spec.prevalence <= 0.0) return -INFINITY;
  if (spec.prevalence >= 1.0) return INFINITY;
  prior = std::log(spec.prevalence / (1.0 - spec.prevalence));
  double lo = prior;
  for (std::size_t j = 0; j < kNamedFeatureCount; ++j) {
    const double z = (named_values[j] - kStaticFeatures[j].mean) / kStaticFeatures[j].sd;
    const double w = spec.effect_weights[j];
    lo += w * z - 0.5 * w * w;
  }
  const Eigen::VectorXd d = detail::series_drift(spec);
  const Eigen::MatrixXd cov = detail::series_covariance(spec.series_length);
  Eigen::VectorXd r(d.size());
  for (Eigen::Index t = 0; t < r.size(); ++t) r(t) = series[static_cast<std::size_t>(t)] - kSeriesBaseline;
  const Eigen::VectorXd sd = cov.ldlt().solve(d);
  lo += sd.dot(r) - 0.5 * sd.dot(d);
  return lo;
}

// Labels are drawn first with P(y=1) = prevalence; latent features are
// N(y * effect_weights, I). The resulting posterior is exactly logistic in the
// latent features with coefficients effect_weights. All randomness for row i
// comes from derive_seed(seed, i).
inline RawTable generate_cohort(const CohortSpec& spec) {
  spec.validate();
  RawTable table;
  table.header = cohort_header(spec);
  const std::size_t width = table.header.size();
  table.types.assign(width, ColumnType::real);
  table.types.front() = ColumnType::text;
  table.types.back() = ColumnType::integer;
  table.rows.reserve(spec.n);

  for (std::size_t i = 0; i < spec.n; ++i) {
    Rng rng(derive_seed(spec.seed, i));
    const detail::RowDraw draw = detail::draw_row(spec, rng);
    std::vector<Cell> row;
    row.reserve(width);
    char id[32];
    std::snprintf(id, sizeof(id), "P%07zu", i);
    row.emplace_back(std::string(id));
    for (std::size_t j = 0; j < kNamedFeatureCount; ++j)
      row.emplace_back(kStaticFeatures[j].mean + kStaticFeatures[j].sd * draw.latent[j]);
    for (double v : draw.noise) row.emplace_back(v);
    for (double v : draw.series) row.emplace_back(v);
    // Missingness draws come after all value draws so that changing the rate
    // does not perturb the values themselves.
    for (std::size_t j = 1; j + 1 < width; ++j)
      if (uniform01(rng) < spec.missing_rate) row[j] = std::monostate{};
    row.emplace_back(static_cast<std::int64_t>(draw.label));
    table.rows.push_back(std::move(row));
  }
  return table;
}

// Posterior log-odds of every generated row computed from the complete values
// (before missingness is applied).
inline std::vector<double> generate_bayes_scores(const CohortSpec& spec) {
  spec.validate();
  std::vector<double> scores;
  scores.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    Rng rng(derive_seed(spec.seed, i));
    const detail::RowDraw draw = detail::draw_row(spec, rng);
    std::vector<double> named;
    for (std::size_t j = 0; j < kNamedFeatureCount; ++j)
      named.push_back(kStaticFeatures[j].mean + kStaticFeatures[j].sd * draw.latent[j]);
    scores.push_back(bayes_log_odds(spec, named, draw.series));
  }
  return scores;
}

struct PatientRecord {
  std::string patient_id;
  std::vector<std::string> static_names;
  std::vector<double> statics;
  std::vector<bool> static_missing;
  std::vector<double> glucose_series;
  std::vector<bool> series_missing;
  std::optional<int> label;
};

// Which table columns play which role. Missing cells are reported through the
// masks with the stored value set to NaN.
struct RecordSchema {
  std::string id_column = "patient_id";
  std::vector<std::string> static_columns;
  std::size_t series_length = 7;
  std::string label_column = "label";
  bool label_required = false;

  static RecordSchema for_cohort(const CohortSpec& spec) {
    RecordSchema s;
    for (const auto& f : kStaticFeatures) s.static_columns.emplace_back(f.name);
    for (std::size_t k = 0; k < spec.n_noise_features; ++k)
      s.static_columns.push_back("noise_" + std::to_string(k + 1));
    s.series_length = spec.series_length;
    return s;
  }
};

inline std::vector<PatientRecord> to_records(const RawTable& table, const RecordSchema& schema) {
  require(schema.series_length >= 1, "series length must be >= 1");
  auto column = [&](const std::string& name) {
    auto j = table.find_column(name);
    require(j.has_value(), "missing required column \"", name, "\"");
    return *j;
  };
  auto numeric_column = [&](const std::string& name) {
    const std::size_t j = column(name);
    if (table.types[j] == ColumnType::text) {
      for (std::size_t r = 0; r < table.rows.size(); ++r)
        if (!is_null(table.rows[r][j]))
          fail("non-numeric cell at row ", r + 1, ", column \"", name, "\"");
    }
    return j;
  };

  const auto id_col = table.find_column(schema.id_column);
  std::vector<std::size_t> static_cols;
  for (const auto& name : schema.static_columns) static_cols.push_back(numeric_column(name));
  std::vector<std::size_t> series_cols;
  for (std::size_t t = 0; t < schema.series_length; ++t) series_cols.push_back(numeric_column(series_column(t)));
  std::optional<std::size_t> label_col = table.find_column(schema.label_column);
  if (schema.label_required) require(label_col.has_value(), "missing required column \"", schema.label_column, "\"");
  if (label_col) numeric_column(schema.label_column);

  std::vector<PatientRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    PatientRecord rec;
    rec.patient_id = id_col ? format_cell(row[*id_col]) : std::to_string(r);
    rec.static_names = schema.static_columns;
    for (std::size_t j : static_cols) {
      auto v = as_number(row[j]);
      rec.statics.push_back(v.value_or(std::nan("")));
      rec.static_missing.push_back(!v.has_value());
    }
    for (std::size_t j : series_cols) {
      auto v = as_number(row[j]);
      rec.glucose_series.push_back(v.value_or(std::nan("")));
      rec.series_missing.push_back(!v.has_value());
    }
    if (label_col) {
      auto v = as_number(row[*label_col]);
      if (v) {
        require(*v == 0.0 || *v == 1.0, "label must be 0 or 1 at row ", r + 1);
        rec.label = static_cast<int>(*v);
      } else {
        require(!schema.label_required, "missing label at row ", r + 1);
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace glycopipe::data
