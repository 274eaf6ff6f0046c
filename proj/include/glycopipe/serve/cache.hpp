// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iterator>
#include <limits>
#include <list>
#include <optional>
#include <unordered_map>

#include "glycopipe/common.hpp"

namespace glycopipe::serve {

struct CacheConfig {
  std::size_t capacity = 1000;
  double ttl_seconds = 300.0;  // infinity disables expiry
};

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t evictions = 0;    // capacity evictions
  std::size_t expirations = 0;  // entries purged for age
};

// LRU cache with time-to-live. An entry inserted at t is live while
// now - t <= ttl. Expired entries are dropped lazily: on lookup, and in a
// purge that put() runs before evicting for capacity.
template <typename Key, typename Value>
class LruTtlCache {
 public:
  explicit LruTtlCache(CacheConfig cfg = {}) : cfg_(cfg) {
    require(cfg.ttl_seconds >= 0.0, "ttl must be >= 0");
  }

  std::optional<Value> get(const Key& key, double now) {
    auto it = index_.find(key);
    if (it == index_.end()) {
      ++stats_.misses;
      return std::nullopt;
    }
    if (expired(*it->second, now)) {
      order_.erase(it->second);
      index_.erase(it);
      ++stats_.expirations;
      ++stats_.misses;
      return std::nullopt;
    }
    order_.splice(order_.begin(), order_, it->second);
    it->second->last_access = now;
    ++stats_.hits;
    return it->second->value;
  }

  void put(const Key& key, Value value, double now) {
    if (cfg_.capacity == 0) return;
    if (auto it = index_.find(key); it != index_.end()) {
      it->second->value = std::move(value);
      it->second->inserted = now;
      it->second->last_access = now;
      order_.splice(order_.begin(), order_, it->second);
      return;
    }
    if (order_.size() >= cfg_.capacity) purge_expired(now);
    if (order_.size() >= cfg_.capacity) {
      index_.erase(order_.back().key);
      order_.pop_back();
      ++stats_.evictions;
    }
    order_.push_front({key, std::move(value), now, now});
    index_[key] = order_.begin();
  }

  void purge_expired(double now) {
    for (auto it = order_.begin(); it != order_.end();) {
      if (expired(*it, now)) {
        index_.erase(it->key);
        it = order_.erase(it);
        ++stats_.expirations;
      } else {
        ++it;
      }
    }
  }

  std::size_t size() const { return order_.size(); }
  const CacheStats& stats() const { return stats_; }
  const CacheConfig& config() const { return cfg_; }

 private:
  struct Node {
    Key key;
    Value value;
    double inserted;
    double last_access;
  };

  bool expired(const Node& n, double now) const { return now - n.inserted > cfg_.ttl_seconds; }

  CacheConfig cfg_;
  std::list<Node> order_;  // most recently used first
  std::unordered_map<Key, typename std::list<Node>::iterator> index_;
  CacheStats stats_;
};

}  // namespace glycopipe::serve
