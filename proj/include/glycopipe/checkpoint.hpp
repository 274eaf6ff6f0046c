// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Versioned binary container shared by models, preprocessing state and
// Paillier keys. All integers are little-endian.
//
//   "GLYC"                      4-byte magic
//   u16 version                 currently 1
//   u32 n, n bytes              config document (UTF-8 JSON)
//   u32 entry count
//   directory, per entry:
//     u16 n, n bytes            name
//     u8 dtype                  0 = f64, 1 = i8, 2 = bigint
//     u8 rank, u64 dims[rank]
//     i8 only: f64 scale, i64 zero_point
//   data, per entry in directory order:
//     f64: prod(dims) IEEE-754 doubles
//     i8:  prod(dims) signed bytes
//     bigint: u32 n, n bytes big-endian magnitude (nonnegative)

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "glycopipe/common.hpp"

namespace glycopipe::io {

inline constexpr char kMagic[4] = {'G', 'L', 'Y', 'C'};
inline constexpr std::uint16_t kFormatVersion = 1;

enum class DType : std::uint8_t { f64 = 0, i8 = 1, bigint = 2 };

struct Entry {
  std::string name;
  DType dtype = DType::f64;
  std::vector<std::uint64_t> shape;
  std::vector<double> f64;
  std::vector<std::int8_t> i8;
  double scale = 1.0;
  std::int64_t zero_point = 0;
  std::vector<std::uint8_t> bigint;  // big-endian magnitude

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

struct Checkpoint {
  nlohmann::json config = nlohmann::json::object();
  std::vector<Entry> entries;

  const Entry& at(std::string_view name) const {
    for (const auto& e : entries)
      if (e.name == name) return e;
    fail("checkpoint has no entry \"", name, "\"");
  }

  bool contains(std::string_view name) const {
    for (const auto& e : entries)
      if (e.name == name) return true;
    return false;
  }
};

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class Writer {
 public:
  template <typename T>
  void put(T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.append(reinterpret_cast<const char*>(b), sizeof(T));
  }
  void bytes(const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); }
  std::string out;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    unsigned char b[sizeof(T)];
    std::memcpy(b, in_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const { require(pos_ + n <= in_.size(), "truncated checkpoint"); }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize(const Checkpoint& ck) {
  detail::Writer w;
  w.bytes(kMagic, 4);
  w.put<std::uint16_t>(kFormatVersion);
  const std::string cfg = ck.config.dump();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.size()));
  w.bytes(cfg.data(), cfg.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ck.entries.size()));
  for (const auto& e : ck.entries) {
    require(e.name.size() < 65536, "entry name too long");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(e.dtype));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(e.shape.size()));
    for (auto d : e.shape) w.put<std::uint64_t>(d);
    if (e.dtype == DType::i8) {
      w.put<double>(e.scale);
      w.put<std::int64_t>(e.zero_point);
    }
  }
  for (const auto& e : ck.entries) {
    switch (e.dtype) {
      case DType::f64:
        require(e.f64.size() == e.element_count(), "entry \"", e.name, "\" size does not match shape");
        for (double v : e.f64) w.put<double>(v);
        break;
      case DType::i8:
        require(e.i8.size() == e.element_count(), "entry \"", e.name, "\" size does not match shape");
        w.bytes(e.i8.data(), e.i8.size());
        break;
      case DType::bigint:
        w.put<std::uint32_t>(static_cast<std::uint32_t>(e.bigint.size()));
        w.bytes(e.bigint.data(), e.bigint.size());
        break;
    }
  }
  return w.out;
}

inline Checkpoint deserialize(std::string_view bytes) {
  detail::Reader r(bytes);
  require(r.bytes(4) == std::string_view(kMagic, 4), "not a checkpoint (bad magic)");
  const auto version = r.get<std::uint16_t>();
  require(version == kFormatVersion, "unsupported checkpoint version ", version);
  Checkpoint ck;
  const auto cfg_len = r.get<std::uint32_t>();
  ck.config = nlohmann::json::parse(r.bytes(cfg_len));
  const auto count = r.get<std::uint32_t>();
  ck.entries.resize(count);
  for (auto& e : ck.entries) {
    const auto n = r.get<std::uint16_t>();
    e.name = std::string(r.bytes(n));
    const auto dt = r.get<std::uint8_t>();
    require(dt <= 2, "unknown dtype ", int(dt), " for entry \"", e.name, "\"");
    e.dtype = static_cast<DType>(dt);
    const auto rank = r.get<std::uint8_t>();
    for (int k = 0; k < rank; ++k) e.shape.push_back(r.get<std::uint64_t>());
    if (e.dtype == DType::i8) {
      e.scale = r.get<double>();
      e.zero_point = r.get<std::int64_t>();
    }
  }
  for (auto& e : ck.entries) {
    switch (e.dtype) {
      case DType::f64:
        e.f64.resize(e.element_count());
        for (auto& v : e.f64) v = r.get<double>();
        break;
      case DType::i8: {
        auto s = r.bytes(e.element_count());
        e.i8.assign(s.begin(), s.end());
        break;
      }
      case DType::bigint: {
        const auto n = r.get<std::uint32_t>();
        auto s = r.bytes(n);
        e.bigint.assign(s.begin(), s.end());
        break;
      }
    }
  }
  require(r.done(), "trailing bytes after checkpoint data");
  return ck;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open \"", path, "\"");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot write \"", path, "\"");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), "write to \"", path, "\" failed");
}

inline void save(const Checkpoint& ck, const std::string& path) { write_file(path, serialize(ck)); }
inline Checkpoint load(const std::string& path) { return deserialize(read_file(path)); }

}  // namespace glycopipe::io
