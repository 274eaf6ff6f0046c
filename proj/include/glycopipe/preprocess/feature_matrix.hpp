// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glycopipe/common.hpp"
#include "glycopipe/data/cohort.hpp"

namespace glycopipe::preprocess {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct ColumnInfo {
  std::string name;
  std::string unit;
};

// n x d table; mask(i, j) is true when the cell is present. Masked-out cells
// may hold any value and are ignored by every statistic.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  Mask mask;
  std::vector<ColumnInfo> columns;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  static FeatureMatrix dense(Eigen::MatrixXd v, std::vector<std::string> names = {}) {
    FeatureMatrix m;
    m.mask = Mask::Constant(v.rows(), v.cols(), true);
    if (names.empty())
      for (Eigen::Index j = 0; j < v.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
    for (auto& n : names) m.columns.push_back({std::move(n), ""});
    m.values = std::move(v);
    m.validate();
    return m;
  }

  bool complete() const { return mask.all(); }

  void validate() const {
    require(mask.rows() == values.rows() && mask.cols() == values.cols(), "mask shape does not match values");
    require(static_cast<Eigen::Index>(columns.size()) == values.cols(), "column metadata does not match width");
    for (Eigen::Index i = 0; i < values.rows(); ++i)
      for (Eigen::Index j = 0; j < values.cols(); ++j)
        if (mask(i, j))
          require(std::isfinite(values(i, j)), "non-finite value at row ", i, ", column \"",
                  columns[static_cast<std::size_t>(j)].name, "\"");
  }

  FeatureMatrix select_columns(const std::vector<std::size_t>& idx) const {
    FeatureMatrix out;
    out.values.resize(rows(), static_cast<Eigen::Index>(idx.size()));
    out.mask.resize(rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto j = static_cast<Eigen::Index>(idx[k]);
      require(j < cols(), "column index out of range");
      out.values.col(static_cast<Eigen::Index>(k)) = values.col(j);
      out.mask.col(static_cast<Eigen::Index>(k)) = mask.col(j);
      out.columns.push_back(columns[idx[k]]);
    }
    return out;
  }
};

// Builds a matrix from the statics of each record followed, when
// include_series is set, by one column per series day.
inline FeatureMatrix from_records(const std::vector<data::PatientRecord>& records, bool include_series) {
  FeatureMatrix m;
  if (records.empty()) return m;
  const auto& first = records.front();
  const std::size_t ns = first.statics.size();
  const std::size_t nt = include_series ? first.glucose_series.size() : 0;
  const auto n = static_cast<Eigen::Index>(records.size());
  const auto d = static_cast<Eigen::Index>(ns + nt);
  m.values.setZero(n, d);
  m.mask.setConstant(n, d, true);
  for (std::size_t j = 0; j < ns; ++j) {
    std::string unit;
    for (const auto& f : data::kStaticFeatures)
      if (first.static_names[j] == f.name) unit = f.unit;
    m.columns.push_back({first.static_names[j], unit});
  }
  for (std::size_t t = 0; t < nt; ++t) m.columns.push_back({data::series_column(t), "mg/dL"});
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    require(r.statics.size() == ns && r.glucose_series.size() == first.glucose_series.size(),
            "record ", i, " has inconsistent dimensions");
    for (std::size_t j = 0; j < ns; ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      m.mask(i, c) = !r.static_missing[j];
      m.values(i, c) = r.static_missing[j] ? 0.0 : r.statics[j];
    }
    for (std::size_t t = 0; t < nt; ++t) {
      const auto c = static_cast<Eigen::Index>(ns + t);
      m.mask(i, c) = !r.series_missing[t];
      m.values(i, c) = r.series_missing[t] ? 0.0 : r.glucose_series[t];
    }
  }
  m.validate();
  return m;
}

}  // namespace glycopipe::preprocess
