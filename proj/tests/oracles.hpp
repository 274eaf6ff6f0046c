// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reference implementations used only by the tests. None of them calls into
// the library code they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Five-point central difference of f along every coordinate of x.
inline VectorXd central_difference(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                                   double h = 1e-3) {
  VectorXd g(x.size());
  VectorXd xp = x;
  auto at = [&](Index k, double offset) {
    xp(k) = x(k) + offset;
    const double v = f(xp);
    xp(k) = x(k);
    return v;
  };
  for (Index k = 0; k < x.size(); ++k)
    g(k) = (at(k, -2 * h) - 8.0 * at(k, -h) + 8.0 * at(k, h) - at(k, 2 * h)) / (12.0 * h);
  return g;
}

// Largest elementwise |a - b| / max(|a|, |b|, floor). The floor keeps
// coordinates whose true value is zero from dividing by rounding noise.
inline double max_relative_error(const VectorXd& a, const VectorXd& b, double floor = 1e-6) {
  double worst = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    const double scale = std::max({std::abs(a(k)), std::abs(b(k)), floor});
    worst = std::max(worst, std::abs(a(k) - b(k)) / scale);
  }
  return worst;
}

// Population covariance by explicit two-pass sums.
inline MatrixXd covariance(const MatrixXd& X) {
  const Index n = X.rows(), d = X.cols();
  VectorXd mean = VectorXd::Zero(d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) mean(j) += X(i, j);
  mean /= static_cast<double>(n);
  MatrixXd S = MatrixXd::Zero(d, d);
  for (Index i = 0; i < n; ++i)
    for (Index a = 0; a < d; ++a)
      for (Index b = 0; b < d; ++b) S(a, b) += (X(i, a) - mean(a)) * (X(i, b) - mean(b));
  return S / static_cast<double>(n);
}

struct Eigenpairs {
  VectorXd values;   // descending
  MatrixXd vectors;  // columns
};

// Dense symmetric eigendecomposition through Eigen's tridiagonal QR solver.
inline Eigenpairs symmetric_eigen(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  const Index d = S.rows();
  Eigenpairs out{VectorXd(d), MatrixXd(d, d)};
  for (Index k = 0; k < d; ++k) {
    out.values(k) = es.eigenvalues()(d - 1 - k);
    out.vectors.col(k) = es.eigenvectors().col(d - 1 - k);
  }
  return out;
}

// Element-wise sum in worker order.
inline VectorXd direct_sum(const std::vector<VectorXd>& inputs) {
  VectorXd s = VectorXd::Zero(inputs.front().size());
  for (const auto& v : inputs)
    for (Index k = 0; k < v.size(); ++k) s(k) += v(k);
  return s;
}

// LRU with time-to-live kept as a flat vector scanned linearly; index 0 is
// the most recently used entry.
class ListLruTtl {
 public:
  ListLruTtl(std::size_t capacity, double ttl) : capacity_(capacity), ttl_(ttl) {}

  std::optional<double> get(std::size_t key, double now) {
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (items_[i].key != key) continue;
      if (now - items_[i].inserted > ttl_) {
        items_.erase(items_.begin() + static_cast<long>(i));
        return std::nullopt;
      }
      const Item it = items_[i];
      items_.erase(items_.begin() + static_cast<long>(i));
      items_.insert(items_.begin(), it);
      return it.value;
    }
    return std::nullopt;
  }

  void put(std::size_t key, double value, double now) {
    if (capacity_ == 0) return;
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (items_[i].key != key) continue;
      items_.erase(items_.begin() + static_cast<long>(i));
      items_.insert(items_.begin(), {key, value, now});
      return;
    }
    if (items_.size() >= capacity_) {
      std::vector<Item> kept;
      for (const auto& it : items_)
        if (!(now - it.inserted > ttl_)) kept.push_back(it);
      items_ = kept;
    }
    if (items_.size() >= capacity_) items_.pop_back();
    items_.insert(items_.begin(), {key, value, now});
  }

  std::size_t size() const { return items_.size(); }

 private:
  struct Item {
    std::size_t key;
    double value;
    double inserted;
  };
  std::size_t capacity_;
  double ttl_;
  std::vector<Item> items_;
};

// Mean queueing delay of M/M/c from the Erlang B recursion
// B(k) = a B(k-1) / (k + a B(k-1)) and C = c B / (c - a (1 - B)).
inline double erlang_c_wait(double lambda, double mean_service, std::size_t c) {
  const double a = lambda * mean_service;
  double B = 1.0;
  for (std::size_t k = 1; k <= c; ++k) B = a * B / (static_cast<double>(k) + a * B);
  const double C = static_cast<double>(c) * B / (static_cast<double>(c) - a * (1.0 - B));
  const double mu = 1.0 / mean_service;
  return C / (static_cast<double>(c) * mu - lambda);
}

// Smallest [lo, hi] with P(X < lo) <= alpha/2 and P(X > hi) <= alpha/2 for
// X ~ Binomial(n, p), from the exact pmf.
inline std::pair<std::size_t, std::size_t> binomial_central_interval(std::size_t n, double p, double alpha) {
  std::vector<double> pmf(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double lg = std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
                      std::lgamma(static_cast<double>(n - k) + 1);
    pmf[k] = std::exp(lg + static_cast<double>(k) * std::log(p) + static_cast<double>(n - k) * std::log1p(-p));
  }
  std::size_t lo = 0;
  double tail = 0.0;
  while (lo < n && tail + pmf[lo] <= alpha / 2) tail += pmf[lo++];
  std::size_t hi = n;
  tail = 0.0;
  while (hi > 0 && tail + pmf[hi] <= alpha / 2) tail += pmf[hi--];
  return {lo, hi};
}

// Shapley values of the interventional game v(S) = mean_b f(x_S, b_rest) by
// averaging marginal contributions over every ordering of the d players.
// Coalition values are tabulated once per subset.
inline VectorXd shapley_by_permutations(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                                        const MatrixXd& background) {
  const auto d = static_cast<std::size_t>(x.size());
  std::vector<double> value(std::size_t{1} << d);
  for (std::size_t mask = 0; mask < value.size(); ++mask) {
    double s = 0.0;
    for (Index r = 0; r < background.rows(); ++r) {
      VectorXd z = background.row(r).transpose();
      for (std::size_t j = 0; j < d; ++j)
        if (mask >> j & 1U) z(static_cast<Index>(j)) = x(static_cast<Index>(j));
      s += f(z);
    }
    value[mask] = s / static_cast<double>(background.rows());
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  VectorXd phi = VectorXd::Zero(static_cast<Index>(d));
  double count = 0.0;
  do {
    std::size_t mask = 0;
    for (std::size_t j : order) {
      const std::size_t next = mask | (std::size_t{1} << j);
      phi(static_cast<Index>(j)) += value[next] - value[mask];
      mask = next;
    }
    count += 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  return phi / count;
}

// Successive halving with eta = 2, grace 1, max_t 8 (rungs at epochs 1, 2
// and 4) over six sequential trials whose metric after epoch e is
// base + 0.01 e. Worked by hand from the keep rule "continue while fewer
// than max(1, ceil(n / 2)) rung entries are strictly better":
//   trial 0 (0.6): alone at every rung, runs to epoch 8
//   trial 1 (0.4): rung 1 {0.61, 0.41}, 1 better, keep 1, stops at 1
//   trial 2 (0.8): best at every rung, runs to 8
//   trial 3 (0.5): rung 1 {.61 .41 .81 .51}, 2 better, keep 2, stops at 1
//   trial 4 (0.9): best everywhere, runs to 8
//   trial 5 (0.7): rung 1 n=6 keep 3, 2 better, continues; rung 2
//                  {.62 .82 .92 .72} keep 2, 2 better, stops at 2
struct AshaTraceRow {
  double base;
  std::size_t epochs;
  bool stopped;
};

inline const std::vector<AshaTraceRow>& asha_hand_trace() {
  static const std::vector<AshaTraceRow> rows = {{0.6, 8, false}, {0.4, 1, true}, {0.8, 8, false},
                                                 {0.5, 1, true},  {0.9, 8, false}, {0.7, 2, true}};
  return rows;
}

inline constexpr std::size_t kAshaHandTotalEpochs = 28;

}  // namespace oracle
