// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "glycopipe/common.hpp"
#include "glycopipe/preprocess/feature_matrix.hpp"

namespace glycopipe::preprocess {

struct ImputerModel {
  Eigen::VectorXd means;
};

inline ImputerModel fit_imputer(const FeatureMatrix& X) {
  ImputerModel m;
  m.means.setZero(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      if (X.mask(i, j)) {
        sum += X.values(i, j);
        ++count;
      }
    require(count > 0, "column \"", X.columns[static_cast<std::size_t>(j)].name, "\" has no present values");
    m.means(j) = sum / static_cast<double>(count);
  }
  return m;
}

inline FeatureMatrix apply_imputer(const ImputerModel& model, const FeatureMatrix& X) {
  require(model.means.size() == X.cols(), "imputer width ", model.means.size(), " does not match matrix width ",
          X.cols());
  FeatureMatrix out = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      if (!X.mask(i, j)) out.values(i, j) = model.means(j);
  out.mask.setConstant(true);
  return out;
}

// Population statistics (divisor n).
struct ScalerModel {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

inline ScalerModel fit_scaler(const FeatureMatrix& X) {
  require(X.complete(), "scaler requires a complete matrix; impute missing cells first");
  require(X.rows() > 0, "scaler requires at least one row");
  ScalerModel m;
  const double n = static_cast<double>(X.rows());
  m.mean = X.values.colwise().sum().transpose() / n;
  m.stddev.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.values.col(j).array() - m.mean(j)).square().sum() / n;
    m.stddev(j) = std::sqrt(var);
  }
  return m;
}

inline FeatureMatrix apply_scaler(const ScalerModel& model, const FeatureMatrix& X) {
  require(X.complete(), "scaler requires a complete matrix; impute missing cells first");
  require(model.mean.size() == X.cols(), "scaler width does not match matrix width");
  FeatureMatrix out = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (model.stddev(j) == 0.0)
      out.values.col(j).setZero();
    else
      out.values.col(j) = (X.values.col(j).array() - model.mean(j)) / model.stddev(j);
  }
  return out;
}

// Adaptive normalization across data sources: every source's rows are
// z-scored with statistics refit on that source's batch alone.
inline FeatureMatrix normalize_by_source(const FeatureMatrix& X, const std::vector<int>& source) {
  require(static_cast<Eigen::Index>(source.size()) == X.rows(), "one source id per row required");
  std::map<int, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < source.size(); ++i) groups[source[i]].push_back(static_cast<Eigen::Index>(i));
  FeatureMatrix out = X;
  for (const auto& [id, rows] : groups) {
    FeatureMatrix batch;
    batch.values.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    batch.mask.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    batch.columns = X.columns;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      batch.values.row(static_cast<Eigen::Index>(k)) = X.values.row(rows[k]);
      batch.mask.row(static_cast<Eigen::Index>(k)) = X.mask.row(rows[k]);
    }
    const FeatureMatrix scaled = apply_scaler(fit_scaler(batch), batch);
    for (std::size_t k = 0; k < rows.size(); ++k) out.values.row(rows[k]) = scaled.values.row(static_cast<Eigen::Index>(k));
  }
  return out;
}

struct SymmetricEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns, matching values
};

// Cyclic Jacobi rotations on a symmetric matrix. Exact to rounding for the
// small covariance matrices used here.
inline SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& S, int max_sweeps = 100) {
  require(S.rows() == S.cols(), "matrix must be square");
  const Eigen::Index d = S.rows();
  Eigen::MatrixXd A = 0.5 * (S + S.transpose());
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(d, d);
  const double scale = std::max(A.norm(), 1e-300);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < d; ++p)
      for (Eigen::Index q = p + 1; q < d; ++q) off += A(p, q) * A(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;
    for (Eigen::Index p = 0; p < d; ++p) {
      for (Eigen::Index q = p + 1; q < d; ++q) {
        const double apq = A(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < d; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < d; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < d; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return A(a, a) > A(b, b); });
  SymmetricEigen out;
  out.values.resize(d);
  out.vectors.resize(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    out.values(k) = A(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = V.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

// Flips v so its largest-magnitude entry is positive (first such entry on ties).
inline void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index arg = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
  if (v.size() > 0 && v(arg) < 0) v = -v;
}

inline Eigen::MatrixXd population_covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& mean) {
  const Eigen::MatrixXd centered = X.rowwise() - mean.transpose();
  return centered.transpose() * centered / static_cast<double>(X.rows());
}

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;          // k x d, rows are principal axes
  Eigen::VectorXd explained_variance;  // k, descending
  Eigen::VectorXd all_eigenvalues;     // d, descending; kept for reporting
};

inline PcaModel fit_pca(const FeatureMatrix& X, Eigen::Index k) {
  require(X.complete(), "PCA requires a complete matrix");
  require(X.rows() >= 2, "PCA requires at least two rows");
  require(k >= 1 && k <= X.cols(), "PCA component count ", k, " must lie in [1, ", X.cols(), "]");
  require(X.values.allFinite(), "PCA input contains non-finite values");
  PcaModel m;
  m.mean = X.values.colwise().mean().transpose();
  const SymmetricEigen eig = jacobi_eigen(population_covariance(X.values, m.mean));
  m.all_eigenvalues = eig.values.cwiseMax(0.0);
  m.components.resize(k, X.cols());
  m.explained_variance.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXd v = eig.vectors.col(c);
    canonicalize_sign(v);
    m.components.row(c) = v.transpose();
    m.explained_variance(c) = std::max(eig.values(c), 0.0);
  }
  return m;
}

inline FeatureMatrix apply_pca(const PcaModel& model, const FeatureMatrix& X) {
  require(X.complete(), "PCA requires a complete matrix");
  require(X.cols() == model.mean.size(), "PCA width mismatch");
  std::vector<std::string> names;
  for (Eigen::Index c = 0; c < model.components.rows(); ++c) names.push_back("pc_" + std::to_string(c + 1));
  Eigen::MatrixXd scores = (X.values.rowwise() - model.mean.transpose()) * model.components.transpose();
  return FeatureMatrix::dense(std::move(scores), std::move(names));
}

inline Eigen::MatrixXd reconstruct_pca(const PcaModel& model, const Eigen::MatrixXd& scores) {
  return (scores * model.components).rowwise() + model.mean.transpose();
}

}  // namespace glycopipe::preprocess
