// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "glycopipe/common.hpp"

namespace glycopipe::model {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Gate blocks are stacked in the order input, forget, output, candidate:
// rows [0,h) of W/U/b belong to the input gate, [h,2h) to forget, and so on.
struct LstmLayerParams {
  MatrixXd W;  // 4h x x
  MatrixXd U;  // 4h x h
  MatrixXd b;  // 4h x 1

  Index hidden() const { return U.cols(); }
  Index input() const { return W.cols(); }

  static LstmLayerParams zeros(Index input, Index hidden) {
    return {MatrixXd::Zero(4 * hidden, input), MatrixXd::Zero(4 * hidden, hidden), MatrixXd::Zero(4 * hidden, 1)};
  }

  void check() const {
    const Index h = U.cols();
    require(U.rows() == 4 * h && W.rows() == 4 * h && b.rows() == 4 * h && b.cols() == 1,
            "inconsistent LSTM parameter shapes");
  }
};

struct LstmStep {
  VectorXd x, h_prev, c_prev;
  VectorXd i, f, o, g, c, tanh_c;
};

struct LstmCache {
  std::vector<LstmStep> steps;
  MatrixXd H;  // T x h
};

inline VectorXd logistic(const VectorXd& a) {
  VectorXd out(a.size());
  for (Index k = 0; k < a.size(); ++k) out(k) = sigmoid(a(k));
  return out;
}

// seq is T x x (one row per timestep).
inline LstmCache lstm_forward(const LstmLayerParams& layer, const MatrixXd& seq, const VectorXd& h0,
                              const VectorXd& c0) {
  layer.check();
  const Index h = layer.hidden();
  require(seq.cols() == layer.input(), "sequence feature width ", seq.cols(), " does not match LSTM input ",
          layer.input());
  require(h0.size() == h && c0.size() == h, "initial state size does not match hidden size");
  LstmCache cache;
  cache.H.resize(seq.rows(), h);
  VectorXd h_prev = h0, c_prev = c0;
  cache.steps.reserve(static_cast<std::size_t>(seq.rows()));
  for (Index t = 0; t < seq.rows(); ++t) {
    LstmStep s;
    s.x = seq.row(t).transpose();
    s.h_prev = h_prev;
    s.c_prev = c_prev;
    const VectorXd a = layer.W * s.x + layer.U * h_prev + layer.b.col(0);
    s.i = logistic(a.segment(0, h));
    s.f = logistic(a.segment(h, h));
    s.o = logistic(a.segment(2 * h, h));
    s.g = a.segment(3 * h, h).array().tanh();
    s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
    s.tanh_c = s.c.array().tanh();
    const VectorXd ht = s.o.cwiseProduct(s.tanh_c);
    cache.H.row(t) = ht.transpose();
    h_prev = ht;
    c_prev = s.c;
    cache.steps.push_back(std::move(s));
  }
  return cache;
}

struct LstmInputGrad {
  MatrixXd d_seq;  // T x x
  VectorXd d_h0, d_c0;
};

// Backpropagation through time. dH is dLoss/dH (T x h); parameter gradients
// are accumulated into grad.
inline LstmInputGrad lstm_backward(const LstmLayerParams& layer, const LstmCache& cache, const MatrixXd& dH,
                                   LstmLayerParams& grad) {
  const Index h = layer.hidden();
  const auto T = static_cast<Index>(cache.steps.size());
  require(dH.rows() == T && dH.cols() == h, "hidden-state gradient has wrong shape");
  LstmInputGrad out;
  out.d_seq.resize(T, layer.input());
  VectorXd dh_next = VectorXd::Zero(h), dc_next = VectorXd::Zero(h);
  VectorXd da(4 * h);
  for (Index t = T - 1; t >= 0; --t) {
    const LstmStep& s = cache.steps[static_cast<std::size_t>(t)];
    const VectorXd dh = dH.row(t).transpose() + dh_next;
    const VectorXd d_o = dh.cwiseProduct(s.tanh_c);
    const VectorXd dc =
        dh.cwiseProduct(s.o).cwiseProduct((1.0 - s.tanh_c.array().square()).matrix()) + dc_next;
    const VectorXd di = dc.cwiseProduct(s.g);
    const VectorXd dg = dc.cwiseProduct(s.i);
    const VectorXd df = dc.cwiseProduct(s.c_prev);
    dc_next = dc.cwiseProduct(s.f);
    da.segment(0, h) = di.array() * s.i.array() * (1.0 - s.i.array());
    da.segment(h, h) = df.array() * s.f.array() * (1.0 - s.f.array());
    da.segment(2 * h, h) = d_o.array() * s.o.array() * (1.0 - s.o.array());
    da.segment(3 * h, h) = dg.array() * (1.0 - s.g.array().square());
    grad.W.noalias() += da * s.x.transpose();
    grad.U.noalias() += da * s.h_prev.transpose();
    grad.b.col(0) += da;
    out.d_seq.row(t) = (layer.W.transpose() * da).transpose();
    dh_next = layer.U.transpose() * da;
  }
  out.d_h0 = dh_next;
  out.d_c0 = dc_next;
  return out;
}

struct AttentionParams {
  MatrixXd v;     // h x 1
  MatrixXd bias;  // 1 x 1
};

struct AttentionResult {
  VectorXd context;
  VectorXd weights;  // T, sums to one
  MatrixXd tanh_H;   // cached for backward
};

// Additive scoring: score_t = v . tanh(h_t) + bias, weights = softmax(scores),
// context = sum_t weights_t * h_t.
inline AttentionResult attention_pool(const MatrixXd& H, const AttentionParams& attn) {
  require(H.rows() >= 1, "attention needs at least one timestep");
  require(attn.v.rows() == H.cols(), "attention vector size does not match hidden size");
  AttentionResult r;
  r.tanh_H = H.array().tanh();
  VectorXd scores = r.tanh_H * attn.v.col(0);
  scores.array() += attn.bias(0, 0);
  const double mx = scores.maxCoeff();
  r.weights = (scores.array() - mx).exp();
  r.weights /= r.weights.sum();
  r.context = H.transpose() * r.weights;
  return r;
}

// Returns dLoss/dH and accumulates into grad.
inline MatrixXd attention_backward(const MatrixXd& H, const AttentionParams& attn, const AttentionResult& fwd,
                                   const VectorXd& d_context, AttentionParams& grad) {
  const VectorXd d_weights = H * d_context;
  const double mean = fwd.weights.dot(d_weights);
  const VectorXd d_scores = fwd.weights.cwiseProduct((d_weights.array() - mean).matrix());
  grad.v.col(0) += fwd.tanh_H.transpose() * d_scores;
  grad.bias(0, 0) += d_scores.sum();
  MatrixXd dH = fwd.weights * d_context.transpose();
  const MatrixXd dtanh = (1.0 - fwd.tanh_H.array().square()).matrix();
  dH += (d_scores * attn.v.col(0).transpose()).cwiseProduct(dtanh);
  return dH;
}

}  // namespace glycopipe::model
