// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "glycopipe/common.hpp"

namespace glycopipe::hyperopt {

using Eigen::Index;
using Eigen::VectorXd;

// All parameters are numeric; choice values are the candidate numbers.
using Config = std::map<std::string, double>;

enum class ParamKind { log_uniform, uniform, int_uniform, choice };

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::uniform;
  double lo = 0.0, hi = 1.0;
  std::vector<double> values;  // choice only

  static ParamSpec log_uniform(std::string n, double lo, double hi) { return {std::move(n), ParamKind::log_uniform, lo, hi, {}}; }
  static ParamSpec uniform(std::string n, double lo, double hi) { return {std::move(n), ParamKind::uniform, lo, hi, {}}; }
  static ParamSpec int_uniform(std::string n, long lo, long hi) {
    return {std::move(n), ParamKind::int_uniform, static_cast<double>(lo), static_cast<double>(hi), {}};
  }
  static ParamSpec choice(std::string n, std::vector<double> v) { return {std::move(n), ParamKind::choice, 0.0, 0.0, std::move(v)}; }

  void validate() const {
    require(!name.empty(), "parameter name is empty");
    if (kind == ParamKind::choice) {
      require(!values.empty(), "choice \"", name, "\" has no values");
      return;
    }
    require(lo < hi, "parameter \"", name, "\" needs lo < hi");
    if (kind == ParamKind::log_uniform) require(lo > 0.0, "log_uniform \"", name, "\" needs lo > 0");
    if (kind == ParamKind::int_uniform)
      require(lo == std::floor(lo) && hi == std::floor(hi), "int_uniform \"", name, "\" needs integer bounds");
  }

  // Width of this parameter in the encoded space.
  Index encoded_width() const { return kind == ParamKind::choice ? static_cast<Index>(values.size()) : 1; }
};

struct SearchSpace {
  std::vector<ParamSpec> params;

  void validate() const {
    require(!params.empty(), "search space is empty");
    for (const auto& p : params) p.validate();
  }

  Index encoded_dim() const {
    Index d = 0;
    for (const auto& p : params) d += p.encoded_width();
    return d;
  }

  bool contains(const Config& c) const {
    for (const auto& p : params) {
      auto it = c.find(p.name);
      if (it == c.end()) return false;
      const double v = it->second;
      if (p.kind == ParamKind::choice) {
        if (std::find(p.values.begin(), p.values.end(), v) == p.values.end()) return false;
      } else if (v < p.lo || v > p.hi || (p.kind == ParamKind::int_uniform && v != std::floor(v))) {
        return false;
      }
    }
    return true;
  }
};

inline SearchSpace default_search_space() {
  return {{ParamSpec::log_uniform("learning_rate", 1e-5, 1e-1), ParamSpec::choice("batch_size", {32, 64, 128, 256}),
           ParamSpec::int_uniform("lstm_layers", 1, 4), ParamSpec::uniform("dropout", 0.1, 0.7)}};
}

inline Config sample(const SearchSpace& space, Rng& rng) {
  space.validate();
  Config c;
  for (const auto& p : space.params) {
    switch (p.kind) {
      case ParamKind::log_uniform: {
        const double v = std::exp(std::log(p.lo) + uniform01(rng) * (std::log(p.hi) - std::log(p.lo)));
        c[p.name] = std::clamp(v, p.lo, p.hi);
        break;
      }
      case ParamKind::uniform:
        c[p.name] = p.lo + uniform01(rng) * (p.hi - p.lo);
        break;
      case ParamKind::int_uniform:
        c[p.name] = p.lo + static_cast<double>(uniform_index(rng, static_cast<std::size_t>(p.hi - p.lo) + 1));
        break;
      case ParamKind::choice:
        c[p.name] = p.values[uniform_index(rng, p.values.size())];
        break;
    }
  }
  return c;
}

// Unit-cube encoding: log_uniform on the log scale, int_uniform as a scaled
// real, choice as one-hot.
inline VectorXd encode(const SearchSpace& space, const Config& c) {
  VectorXd x = VectorXd::Zero(space.encoded_dim());
  Index k = 0;
  for (const auto& p : space.params) {
    const double v = c.at(p.name);
    switch (p.kind) {
      case ParamKind::log_uniform:
        x(k) = (std::log(v) - std::log(p.lo)) / (std::log(p.hi) - std::log(p.lo));
        break;
      case ParamKind::uniform:
      case ParamKind::int_uniform:
        x(k) = (v - p.lo) / (p.hi - p.lo);
        break;
      case ParamKind::choice: {
        auto it = std::find(p.values.begin(), p.values.end(), v);
        require(it != p.values.end(), "value ", v, " is not a choice of \"", p.name, "\"");
        x(k + (it - p.values.begin())) = 1.0;
        break;
      }
    }
    k += p.encoded_width();
  }
  return x;
}

// Inverse of encode; coordinates are clipped to [0, 1] first, ints are
// rounded and one-hot blocks decode to their largest entry.
inline Config decode(const SearchSpace& space, const VectorXd& x) {
  require(x.size() == space.encoded_dim(), "encoded vector has wrong length");
  Config c;
  Index k = 0;
  for (const auto& p : space.params) {
    const double u = std::clamp(x(k), 0.0, 1.0);
    switch (p.kind) {
      case ParamKind::log_uniform:
        c[p.name] = std::clamp(std::exp(std::log(p.lo) + u * (std::log(p.hi) - std::log(p.lo))), p.lo, p.hi);
        break;
      case ParamKind::uniform:
        c[p.name] = p.lo + u * (p.hi - p.lo);
        break;
      case ParamKind::int_uniform:
        c[p.name] = std::clamp(std::round(p.lo + u * (p.hi - p.lo)), p.lo, p.hi);
        break;
      case ParamKind::choice: {
        Index best = 0;
        x.segment(k, p.encoded_width()).maxCoeff(&best);
        c[p.name] = p.values[static_cast<std::size_t>(best)];
        break;
      }
    }
    k += p.encoded_width();
  }
  return c;
}

inline nlohmann::json config_json(const Config& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : c) j[k] = v;
  return j;
}

}  // namespace glycopipe::hyperopt
