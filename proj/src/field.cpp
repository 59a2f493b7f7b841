#include "ssq/field.hpp"

#include <string>

#include "ssq/error.hpp"

namespace ssq {
namespace {

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t m) {
  return static_cast<uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

uint64_t powmod(uint64_t base, uint64_t e, uint64_t m) {
  uint64_t r = 1 % m;
  base %= m;
  while (e > 0) {
    if (e & 1) r = mulmod(r, base, m);
    base = mulmod(base, base, m);
    e >>= 1;
  }
  return r;
}

}  // namespace

bool is_prime(uint64_t n) {
  if (n < 2) return false;
  for (uint64_t q : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (n % q == 0) return n == q;
  }
  uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // These witnesses are sufficient for all 64-bit n.
  for (uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

PrimeField::PrimeField(uint64_t modulus) : p_(modulus) {
  if (modulus >= (uint64_t{1} << 32)) {
    throw Error(ErrorCode::kBadParams,
                "modulus must be below 2^32, got " + std::to_string(modulus));
  }
  if (!is_prime(modulus)) {
    throw Error(ErrorCode::kBadParams,
                "modulus is not prime: " + std::to_string(modulus));
  }
}

Fp PrimeField::from_int(int64_t x) const noexcept {
  int64_t r = x % static_cast<int64_t>(p_);
  if (r < 0) r += static_cast<int64_t>(p_);
  return Fp{static_cast<uint64_t>(r)};
}

Fp PrimeField::inverse(Fp a) const {
  if (a.v == 0) throw Error(ErrorCode::kZeroInverse, "inverse of 0");
  // Fermat: a^(p-2).
  return Fp{powmod(a.v, p_ - 2, p_)};
}

std::vector<Fp> PrimeField::lagrange_weights_at_zero(
    std::span<const Fp> xs) const {
  if (xs.empty()) throw Error(ErrorCode::kBadParams, "no interpolation points");
  const size_t k = xs.size();
  std::vector<Fp> weights(k);
  for (size_t i = 0; i < k; ++i) {
    Fp num{1};
    Fp den{1};
    for (size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      if (xs[j] == xs[i]) {
        throw Error(ErrorCode::kDuplicateX,
                    "x = " + std::to_string(xs[i].v) + " appears twice");
      }
      // l_i(0) = prod_{j != i} (0 - x_j) / (x_i - x_j)
      num = mul(num, neg(xs[j]));
      den = mul(den, sub(xs[i], xs[j]));
    }
    weights[i] = mul(num, inverse(den));
  }
  return weights;
}

Fp PrimeField::interpolate_at_zero(
    std::span<const std::pair<Fp, Fp>> points) const {
  std::vector<Fp> xs;
  xs.reserve(points.size());
  for (const auto& [x, y] : points) xs.push_back(from_uint(x.v));
  const auto weights = lagrange_weights_at_zero(xs);
  Fp acc{0};
  for (size_t i = 0; i < points.size(); ++i) {
    acc = add(acc, mul(weights[i], from_uint(points[i].second.v)));
  }
  return acc;
}

}  // namespace ssq
