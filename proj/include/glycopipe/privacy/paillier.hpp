// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "glycopipe/checkpoint.hpp"
#include "glycopipe/common.hpp"

namespace glycopipe::privacy {

using BigInt = mpz_class;

struct PaillierPublicKey {
  BigInt n, n_squared, g;
  std::size_t key_bits = 0;
};

struct PaillierPrivateKey {
  BigInt p, q;
  BigInt lambda, mu;
};

struct PaillierKeyPair {
  PaillierPublicKey pub;
  PaillierPrivateKey priv;

  // Builds a key from two primes. Used by keygen and by tests with toy primes.
  static PaillierKeyPair from_primes(const BigInt& p, const BigInt& q);
};

struct Ciphertext {
  BigInt value;
};

namespace detail {

inline BigInt L(const BigInt& u, const BigInt& n) { return (u - 1) / n; }

inline BigInt powm(const BigInt& base, const BigInt& exp, const BigInt& mod) {
  BigInt r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return r;
}

inline BigInt invert(const BigInt& a, const BigInt& mod) {
  BigInt r;
  require(mpz_invert(r.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) != 0, "value is not invertible");
  return r;
}

inline BigInt gcd(const BigInt& a, const BigInt& b) {
  BigInt r;
  mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

inline BigInt lcm(const BigInt& a, const BigInt& b) {
  BigInt r;
  mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

inline std::size_t bit_length(const BigInt& a) { return a == 0 ? 0 : mpz_sizeinbase(a.get_mpz_t(), 2); }

// Uniform in [0, bound) by rejection over 64-bit words from rng.
inline BigInt random_below(const BigInt& bound, Rng& rng) {
  const std::size_t bits = bit_length(bound);
  const std::size_t words = (bits + 63) / 64;
  for (;;) {
    BigInt r = 0;
    for (std::size_t w = 0; w < words; ++w) {
      r <<= 64;
      r += BigInt(static_cast<unsigned long>(rng()));
    }
    mpz_fdiv_r_2exp(r.get_mpz_t(), r.get_mpz_t(), static_cast<mp_bitcnt_t>(bits));
    if (r < bound) return r;
  }
}

// 40 Miller-Rabin rounds bound the false-prime probability by 4^-40 = 2^-80.
inline constexpr int kPrimalityReps = 40;

inline bool is_probable_prime(const BigInt& x) { return mpz_probab_prime_p(x.get_mpz_t(), kPrimalityReps) > 0; }

// Random prime with exactly `bits` bits and its two top bits set, so the
// product of two such primes has exactly the sum of their bit lengths.
inline BigInt random_prime(std::size_t bits, Rng& rng) {
  const BigInt top = BigInt(1) << static_cast<mp_bitcnt_t>(bits);
  for (;;) {
    BigInt c = random_below(top, rng);
    mpz_setbit(c.get_mpz_t(), static_cast<mp_bitcnt_t>(bits - 1));
    mpz_setbit(c.get_mpz_t(), static_cast<mp_bitcnt_t>(bits - 2));
    mpz_setbit(c.get_mpz_t(), 0);
    for (; c < top; c += 2)
      if (is_probable_prime(c)) return c;
  }
}

inline std::vector<std::uint8_t> to_bytes(const BigInt& v) {
  require(v >= 0, "only nonnegative integers are serialized");
  std::vector<std::uint8_t> out((mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8);
  std::size_t count = 0;
  if (v != 0) mpz_export(out.data(), &count, 1, 1, 1, 0, v.get_mpz_t());
  out.resize(count);
  return out;
}

inline BigInt from_bytes(const std::vector<std::uint8_t>& bytes) {
  BigInt v = 0;
  if (!bytes.empty()) mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  return v;
}

}  // namespace detail

inline PaillierKeyPair PaillierKeyPair::from_primes(const BigInt& p, const BigInt& q) {
  require(p > 2 && q > 2 && p != q, "primes must be distinct and odd");
  require(mpz_probab_prime_p(p.get_mpz_t(), detail::kPrimalityReps) > 0 &&
              mpz_probab_prime_p(q.get_mpz_t(), detail::kPrimalityReps) > 0,
          "p and q must be prime");
  PaillierKeyPair kp;
  kp.pub.n = p * q;
  require(detail::gcd(kp.pub.n, (p - 1) * (q - 1)) == 1, "gcd(n, (p-1)(q-1)) must be 1");
  kp.pub.n_squared = kp.pub.n * kp.pub.n;
  kp.pub.g = kp.pub.n + 1;
  kp.pub.key_bits = detail::bit_length(kp.pub.n);
  kp.priv.p = p;
  kp.priv.q = q;
  kp.priv.lambda = detail::lcm(p - 1, q - 1);
  const BigInt u = detail::powm(kp.pub.g, kp.priv.lambda, kp.pub.n_squared);
  kp.priv.mu = detail::invert(detail::L(u, kp.pub.n), kp.pub.n);
  return kp;
}

// Deterministic given seed; n has exactly `bits` bits.
inline PaillierKeyPair paillier_keygen(std::size_t bits, std::uint64_t seed) {
  require(bits >= 64, "key size must be at least 64 bits, got ", bits);
  Rng rng = make_rng(seed, 0x9a11);
  const std::size_t bp = (bits + 1) / 2, bq = bits / 2;
  for (;;) {
    const BigInt p = detail::random_prime(bp, rng);
    const BigInt q = detail::random_prime(bq, rng);
    if (p == q || detail::gcd(p * q, (p - 1) * (q - 1)) != 1) continue;
    return PaillierKeyPair::from_primes(p, q);
  }
}

inline Ciphertext paillier_encrypt(const PaillierPublicKey& pk, const BigInt& m, Rng& rng) {
  require(m >= 0 && m < pk.n, "plaintext must lie in [0, n)");
  BigInt r;
  do {
    r = detail::random_below(pk.n, rng);
  } while (r == 0 || detail::gcd(r, pk.n) != 1);
  // g^m = (n+1)^m = 1 + m*n (mod n^2).
  BigInt gm = (1 + m * pk.n) % pk.n_squared;
  return {(gm * detail::powm(r, pk.n, pk.n_squared)) % pk.n_squared};
}

inline BigInt paillier_decrypt(const PaillierKeyPair& kp, const Ciphertext& c) {
  require(c.value >= 0 && c.value < kp.pub.n_squared, "ciphertext out of range");
  const BigInt u = detail::powm(c.value, kp.priv.lambda, kp.pub.n_squared);
  return (detail::L(u, kp.pub.n) * kp.priv.mu) % kp.pub.n;
}

inline Ciphertext paillier_add(const PaillierPublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  return {(a.value * b.value) % pk.n_squared};
}

inline Ciphertext paillier_scalar_mul(const PaillierPublicKey& pk, const Ciphertext& c, const BigInt& k) {
  require(k >= 0, "scalar must be nonnegative");
  return {detail::powm(c.value, k, pk.n_squared)};
}

// Signed reals to Z_n: v -> round(v * 2^frac_bits), negatives as n - |.|.
// A sum of up to capacity() encodings of values with |v| <= max_magnitude
// stays below n/2 in magnitude and so decodes without wraparound.
class FixedPointCodec {
 public:
  FixedPointCodec(BigInt n, double max_magnitude = 1e6, int frac_bits = 40)
      : n_(std::move(n)), half_(n_ / 2), max_magnitude_(max_magnitude), frac_bits_(frac_bits) {
    require(frac_bits >= 0 && frac_bits <= 60, "frac_bits must lie in [0, 60]");
    require(max_magnitude > 0.0 && std::isfinite(max_magnitude), "max_magnitude must be positive");
    BigInt bound(std::ceil(std::ldexp(max_magnitude, frac_bits)));
    capacity_ = half_ / bound;
    require(capacity_ >= 1, "modulus too small for max_magnitude ", max_magnitude, " at 2^", frac_bits);
  }

  double scale() const { return std::ldexp(1.0, frac_bits_); }
  int frac_bits() const { return frac_bits_; }
  double max_magnitude() const { return max_magnitude_; }
  const BigInt& modulus() const { return n_; }

  // Largest number of summands that is guaranteed to decode correctly.
  BigInt capacity() const { return capacity_; }

  BigInt encode(double v) const {
    require(std::isfinite(v), "cannot encode non-finite value");
    require(std::abs(v) <= max_magnitude_, "value ", v, " exceeds codec max magnitude ", max_magnitude_);
    const BigInt z(std::nearbyint(std::ldexp(std::abs(v), frac_bits_)));
    if (z == 0) return 0;
    return v < 0 ? BigInt(n_ - z) : z;
  }

  double decode(const BigInt& z, std::size_t expected_terms = 1) const {
    require(z >= 0 && z < n_, "encoded value out of range");
    require(expected_terms >= 1 && BigInt(static_cast<unsigned long>(expected_terms)) <= capacity_, "sum of ", expected_terms,
            " terms exceeds codec capacity");
    if (z > half_) return -std::ldexp(BigInt(n_ - z).get_d(), -frac_bits_);
    return std::ldexp(z.get_d(), -frac_bits_);
  }

 private:
  BigInt n_, half_;
  double max_magnitude_;
  int frac_bits_;
  BigInt capacity_;
};

inline io::Checkpoint to_checkpoint(const PaillierKeyPair& kp) {
  io::Checkpoint ck;
  ck.config = {{"kind", "paillier_keypair"}, {"key_bits", kp.pub.key_bits}};
  for (const auto& [name, v] : {std::pair<const char*, const BigInt*>{"n", &kp.pub.n}, {"p", &kp.priv.p}, {"q", &kp.priv.q}}) {
    io::Entry e;
    e.name = name;
    e.dtype = io::DType::bigint;
    e.bigint = detail::to_bytes(*v);
    ck.entries.push_back(std::move(e));
  }
  return ck;
}

inline PaillierKeyPair keypair_from_checkpoint(const io::Checkpoint& ck) {
  require(ck.config.value("kind", "") == "paillier_keypair", "checkpoint is not a Paillier keypair");
  PaillierKeyPair kp = PaillierKeyPair::from_primes(detail::from_bytes(ck.at("p").bigint), detail::from_bytes(ck.at("q").bigint));
  require(kp.pub.n == detail::from_bytes(ck.at("n").bigint), "stored modulus does not match p*q");
  return kp;
}

}  // namespace glycopipe::privacy
