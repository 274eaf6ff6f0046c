// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glycopipe/common.hpp"
#include "glycopipe/model/config.hpp"
#include "glycopipe/model/lstm.hpp"

namespace glycopipe::model {

struct Example {
  VectorXd statics;  // static feature vector
  MatrixXd series;   // T x x, one row per timestep
  int label = 0;
};

using Dataset = std::vector<Example>;

struct DenseParams {
  MatrixXd W;  // out x in
  MatrixXd b;  // out x 1
};

struct Architecture {
  std::size_t static_dim = 0;
  std::size_t series_dim = 1;
  std::size_t hidden_size = 32;
  std::size_t lstm_layers = 1;
  std::vector<std::size_t> mlp_hidden;

  std::size_t mlp_out_dim() const { return mlp_hidden.empty() ? static_dim : mlp_hidden.back(); }
  std::size_t fusion_dim() const { return hidden_size + mlp_out_dim(); }

  static Architecture from(const TrainConfig& cfg, std::size_t static_dim, std::size_t series_dim) {
    return {static_dim, series_dim, cfg.hidden_size, cfg.lstm_layers, cfg.mlp_hidden};
  }
};

inline bool operator==(const Architecture& a, const Architecture& b) {
  return a.static_dim == b.static_dim && a.series_dim == b.series_dim && a.hidden_size == b.hidden_size &&
         a.lstm_layers == b.lstm_layers && a.mlp_hidden == b.mlp_hidden;
}

// LSTM stack over the series, additive attention pooling, tanh MLP over the
// statics, and a single dense fusion layer over [context | mlp output]
// producing one logit. Gradients use the same type.
struct FusionParams {
  std::vector<LstmLayerParams> lstm;
  AttentionParams attn;
  std::vector<DenseParams> mlp;
  DenseParams head;

  static FusionParams zeros(const Architecture& a) {
    FusionParams p;
    const auto h = static_cast<Index>(a.hidden_size);
    for (std::size_t l = 0; l < a.lstm_layers; ++l)
      p.lstm.push_back(LstmLayerParams::zeros(l == 0 ? static_cast<Index>(a.series_dim) : h, h));
    p.attn = {MatrixXd::Zero(h, 1), MatrixXd::Zero(1, 1)};
    auto in = static_cast<Index>(a.static_dim);
    for (std::size_t width : a.mlp_hidden) {
      const auto out = static_cast<Index>(width);
      p.mlp.push_back({MatrixXd::Zero(out, in), MatrixXd::Zero(out, 1)});
      in = out;
    }
    p.head = {MatrixXd::Zero(1, static_cast<Index>(a.fusion_dim())), MatrixXd::Zero(1, 1)};
    return p;
  }
};

// Visits every tensor in a fixed order with a stable name. Works for const
// and mutable parameter sets.
template <typename Params, typename Fn>
void visit_tensors(Params& p, Fn&& fn) {
  for (std::size_t l = 0; l < p.lstm.size(); ++l) {
    const std::string prefix = "lstm." + std::to_string(l) + ".";
    fn(prefix + "W", p.lstm[l].W);
    fn(prefix + "U", p.lstm[l].U);
    fn(prefix + "b", p.lstm[l].b);
  }
  fn(std::string("attn.v"), p.attn.v);
  fn(std::string("attn.bias"), p.attn.bias);
  for (std::size_t l = 0; l < p.mlp.size(); ++l) {
    const std::string prefix = "mlp." + std::to_string(l) + ".";
    fn(prefix + "W", p.mlp[l].W);
    fn(prefix + "b", p.mlp[l].b);
  }
  fn(std::string("head.W"), p.head.W);
  fn(std::string("head.b"), p.head.b);
}

inline std::size_t param_count(const FusionParams& p) {
  std::size_t n = 0;
  visit_tensors(p, [&](const std::string&, const MatrixXd& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

inline VectorXd flatten(const FusionParams& p) {
  VectorXd flat(static_cast<Index>(param_count(p)));
  Index off = 0;
  visit_tensors(p, [&](const std::string&, const MatrixXd& t) {
    flat.segment(off, t.size()) = t.reshaped();
    off += t.size();
  });
  return flat;
}

inline void unflatten(const VectorXd& flat, FusionParams& p) {
  require(flat.size() == static_cast<Index>(param_count(p)), "flat parameter vector has wrong length");
  Index off = 0;
  visit_tensors(p, [&](const std::string&, MatrixXd& t) {
    t.reshaped() = flat.segment(off, t.size());
    off += t.size();
  });
}

struct FusionModel {
  Architecture arch;
  FusionParams params;
  double dropout_rate = 0.0;
  TrainConfig hyper;

  static FusionModel zeros(const Architecture& arch) {
    FusionModel m;
    m.arch = arch;
    m.params = FusionParams::zeros(arch);
    return m;
  }

  // Uniform(+-1/sqrt(fan_in)) for every tensor, drawn from the seed.
  static FusionModel initialize(const Architecture& arch, const TrainConfig& cfg) {
    FusionModel m = zeros(arch);
    m.dropout_rate = cfg.dropout_rate;
    m.hyper = cfg;
    Rng rng = make_rng(cfg.seed, 0x1417);
    auto fill = [&](MatrixXd& t, Index fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(fan_in, 1)));
      for (Index k = 0; k < t.size(); ++k) t.data()[k] = (2.0 * uniform01(rng) - 1.0) * bound;
    };
    for (auto& layer : m.params.lstm) {
      fill(layer.W, layer.input());
      fill(layer.U, layer.hidden());
      fill(layer.b, layer.hidden());
    }
    fill(m.params.attn.v, static_cast<Index>(arch.hidden_size));
    fill(m.params.attn.bias, static_cast<Index>(arch.hidden_size));
    for (auto& d : m.params.mlp) {
      fill(d.W, d.W.cols());
      fill(d.b, d.W.cols());
    }
    fill(m.params.head.W, m.params.head.W.cols());
    fill(m.params.head.b, m.params.head.W.cols());
    return m;
  }

  std::size_t parameter_count() const { return param_count(params); }
};

struct ForwardTrace {
  std::vector<LstmCache> lstm;
  AttentionResult attn;
  std::vector<VectorXd> mlp_activations;  // [statics, layer1, ..., layerL]
  VectorXd fused;                         // before dropout
  VectorXd dropout_scale;                 // mask / (1 - p), ones in eval mode
  double logit = 0.0;
  double probability = 0.5;
};

enum class Mode { eval, train };

// rng is required in train mode when dropout_rate > 0.
inline ForwardTrace forward_trace(const FusionModel& model, const Example& x, Mode mode = Mode::eval,
                                  Rng* rng = nullptr) {
  const Architecture& a = model.arch;
  require(static_cast<std::size_t>(x.statics.size()) == a.static_dim, "static feature width ", x.statics.size(),
          " does not match model input ", a.static_dim);
  require(static_cast<std::size_t>(x.series.cols()) == a.series_dim, "series feature width ", x.series.cols(),
          " does not match model input ", a.series_dim);
  require(x.series.rows() >= 1, "series must have at least one timestep");
  ForwardTrace tr;
  const auto h = static_cast<Index>(a.hidden_size);
  const VectorXd zero = VectorXd::Zero(h);
  const MatrixXd* input = &x.series;
  for (const auto& layer : model.params.lstm) {
    tr.lstm.push_back(lstm_forward(layer, *input, zero, zero));
    input = &tr.lstm.back().H;
  }
  tr.attn = attention_pool(*input, model.params.attn);

  tr.mlp_activations.push_back(x.statics);
  for (const auto& d : model.params.mlp) {
    const VectorXd pre = d.W * tr.mlp_activations.back() + d.b.col(0);
    tr.mlp_activations.push_back(pre.array().tanh());
  }
  tr.fused.resize(static_cast<Index>(a.fusion_dim()));
  tr.fused << tr.attn.context, tr.mlp_activations.back();

  tr.dropout_scale = VectorXd::Ones(tr.fused.size());
  if (mode == Mode::train && model.dropout_rate > 0.0) {
    require(rng != nullptr, "train-mode dropout needs a random generator");
    const double keep = 1.0 - model.dropout_rate;
    for (Index k = 0; k < tr.dropout_scale.size(); ++k)
      tr.dropout_scale(k) = uniform01(*rng) < keep ? 1.0 / keep : 0.0;
  }
  tr.logit = model.params.head.W.row(0).dot(tr.fused.cwiseProduct(tr.dropout_scale)) + model.params.head.b(0, 0);
  tr.probability = sigmoid(tr.logit);
  return tr;
}

inline double predict(const FusionModel& model, const Example& x) { return forward_trace(model, x).probability; }

// Binary cross-entropy from the logit.
inline double bce_loss(double logit, int label) { return softplus(logit) - static_cast<double>(label) * logit; }

struct Gradients {
  FusionParams params;
  VectorXd d_statics;
  MatrixXd d_series;
  double loss = 0.0;
};

// Exact reverse mode of forward_trace for the binary cross-entropy loss;
// parameter gradients are accumulated into grads.params, which must have the
// model's shapes (see FusionParams::zeros). Input gradients are overwritten.
inline void backward_into(const FusionModel& model, const ForwardTrace& tr, int label, Gradients& grads) {
  grads.loss = bce_loss(tr.logit, label);
  const double d_logit = sigmoid(tr.logit) - static_cast<double>(label);
  const auto h = static_cast<Index>(model.arch.hidden_size);
  FusionParams& g = grads.params;

  g.head.W.row(0) += d_logit * tr.fused.cwiseProduct(tr.dropout_scale).transpose();
  g.head.b(0, 0) += d_logit;
  const VectorXd d_fused = (d_logit * model.params.head.W.row(0).transpose()).cwiseProduct(tr.dropout_scale);

  VectorXd d_act = d_fused.tail(d_fused.size() - h);
  for (std::size_t l = model.params.mlp.size(); l-- > 0;) {
    const VectorXd& out = tr.mlp_activations[l + 1];
    const VectorXd d_pre = d_act.cwiseProduct((1.0 - out.array().square()).matrix());
    g.mlp[l].W.noalias() += d_pre * tr.mlp_activations[l].transpose();
    g.mlp[l].b.col(0) += d_pre;
    d_act = model.params.mlp[l].W.transpose() * d_pre;
  }
  grads.d_statics = d_act;

  const MatrixXd& H_top = tr.lstm.back().H;
  MatrixXd dH = attention_backward(H_top, model.params.attn, tr.attn, d_fused.head(h), g.attn);
  for (std::size_t l = model.params.lstm.size(); l-- > 0;) {
    LstmInputGrad ig = lstm_backward(model.params.lstm[l], tr.lstm[l], dH, g.lstm[l]);
    dH = std::move(ig.d_seq);
  }
  grads.d_series = std::move(dH);
}

inline Gradients backward(const FusionModel& model, const ForwardTrace& tr, int label) {
  Gradients g;
  g.params = FusionParams::zeros(model.arch);
  backward_into(model, tr, label, g);
  return g;
}

}  // namespace glycopipe::model
