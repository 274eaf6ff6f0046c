// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "glycopipe/model/fusion.hpp"

namespace glycopipe::model {

// Affine per-tensor int8: value = (q - zero_point) * scale.
struct QuantizedTensor {
  std::string name;
  Index rows = 0, cols = 0;
  std::vector<std::int8_t> q;
  double scale = 1.0;
  std::int64_t zero_point = 0;
};

struct QuantizedModel {
  Architecture arch;
  double dropout_rate = 0.0;
  TrainConfig hyper;
  std::vector<QuantizedTensor> tensors;

  std::size_t weight_bytes() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.q.size();
    return n;
  }
};

// Scale spans [min, max] over 255 steps and the zero point is chosen so that
// min maps to -128, which makes dequantize(quantize(x)) = round(x/scale)*scale
// and bounds the error by scale/2. Constant tensors round-trip exactly.
inline QuantizedTensor quantize_tensor(const std::string& name, const MatrixXd& t) {
  QuantizedTensor out;
  out.name = name;
  out.rows = t.rows();
  out.cols = t.cols();
  out.q.resize(static_cast<std::size_t>(t.size()));
  if (t.size() == 0) return out;
  const double lo = t.minCoeff(), hi = t.maxCoeff();
  if (hi == lo) {
    out.scale = lo == 0.0 ? 1.0 : std::abs(lo);
  } else {
    out.scale = (hi - lo) / 255.0;
  }
  out.zero_point = -128 - static_cast<std::int64_t>(std::llround(lo / out.scale));
  for (Index k = 0; k < t.size(); ++k) {
    const std::int64_t v = std::llround(t.data()[k] / out.scale) + out.zero_point;
    out.q[static_cast<std::size_t>(k)] = static_cast<std::int8_t>(std::clamp<std::int64_t>(v, -128, 127));
  }
  return out;
}

inline MatrixXd dequantize_tensor(const QuantizedTensor& qt) {
  MatrixXd t(qt.rows, qt.cols);
  for (Index k = 0; k < t.size(); ++k)
    t.data()[k] = static_cast<double>(static_cast<std::int64_t>(qt.q[static_cast<std::size_t>(k)]) - qt.zero_point) * qt.scale;
  return t;
}

inline QuantizedModel quantize_int8(const FusionModel& model) {
  QuantizedModel q;
  q.arch = model.arch;
  q.dropout_rate = model.dropout_rate;
  q.hyper = model.hyper;
  visit_tensors(model.params, [&](const std::string& name, const MatrixXd& t) {
    q.tensors.push_back(quantize_tensor(name, t));
  });
  return q;
}

inline FusionModel dequantize(const QuantizedModel& q) {
  FusionModel m = FusionModel::zeros(q.arch);
  m.dropout_rate = q.dropout_rate;
  m.hyper = q.hyper;
  std::size_t k = 0;
  visit_tensors(m.params, [&](const std::string& name, MatrixXd& t) {
    require(k < q.tensors.size() && q.tensors[k].name == name, "quantized tensor \"", name, "\" missing");
    require(q.tensors[k].rows == t.rows() && q.tensors[k].cols == t.cols(), "quantized tensor \"", name,
            "\" has wrong shape");
    t = dequantize_tensor(q.tensors[k++]);
  });
  return m;
}

// Ratio of int8 weight payload to the same weights stored as 32-bit floats.
inline double quantized_size_ratio(const QuantizedModel& q) {
  const double baseline = 4.0 * static_cast<double>(q.weight_bytes());
  return baseline == 0.0 ? 0.0 : static_cast<double>(q.weight_bytes()) / baseline;
}

}  // namespace glycopipe::model
