#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace ssq {

// An element of a prime field. The modulus lives in PrimeField; values are
// always kept reduced into [0, P).
struct Fp {
  uint64_t v = 0;

  friend constexpr bool operator==(Fp a, Fp b) { return a.v == b.v; }
};

// Deterministic primality test, exact for every n < 2^64.
bool is_prime(uint64_t n);

// Arithmetic modulo a public prime P < 2^32, so every product fits in 64 bits.
class PrimeField {
 public:
  static constexpr uint64_t kDefaultModulus = 15'000'017;

  explicit PrimeField(uint64_t modulus = kDefaultModulus);

  uint64_t modulus() const noexcept { return p_; }

  Fp from_uint(uint64_t x) const noexcept { return Fp{x % p_}; }
  Fp from_int(int64_t x) const noexcept;

  Fp add(Fp a, Fp b) const noexcept {
    uint64_t s = a.v + b.v;
    return Fp{s >= p_ ? s - p_ : s};
  }
  Fp sub(Fp a, Fp b) const noexcept {
    return Fp{a.v >= b.v ? a.v - b.v : a.v + p_ - b.v};
  }
  Fp neg(Fp a) const noexcept { return Fp{a.v == 0 ? 0 : p_ - a.v}; }
  Fp mul(Fp a, Fp b) const noexcept { return Fp{(a.v * b.v) % p_}; }

  // Throws Error(kZeroInverse) for a == 0.
  Fp inverse(Fp a) const;

  // f(0) of the unique polynomial of degree < points.size() through `points`
  // (x, y). Throws kDuplicateX on repeated x, kBadParams on an empty input.
  Fp interpolate_at_zero(std::span<const std::pair<Fp, Fp>> points) const;

  // Lagrange basis weights l_i(0) for the abscissae `xs`, so that
  // f(0) = sum_i weights[i] * y_i.
  std::vector<Fp> lagrange_weights_at_zero(std::span<const Fp> xs) const;

  friend bool operator==(const PrimeField& a, const PrimeField& b) {
    return a.p_ == b.p_;
  }

 private:
  uint64_t p_;
};

}  // namespace ssq
