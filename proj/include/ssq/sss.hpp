#pragma once

// Shamir sharing over PrimeField with explicit polynomial-degree tracking.
// Server k always evaluates at x = k (1-based); the secret is f(0).

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ssq/field.hpp"

namespace ssq {

struct Share {
  uint32_t x = 0;
  Fp value;
  int degree = 1;
};

struct SharingParams {
  int servers = 3;
  int degree = 1;
  uint64_t prime = PrimeField::kDefaultModulus;
  std::optional<uint64_t> rng_seed;

  // Throws kBadParams unless servers >= degree + 1 and degree >= 1.
  void validate() const;
};

// Source of sharing-polynomial coefficients. Seeded streams are reproducible;
// an unseeded stream draws its seed from std::random_device.
class CoefficientStream {
 public:
  explicit CoefficientStream(std::optional<uint64_t> seed = std::nullopt);
  // Independent stream keyed by (seed, a, b); used for per-row sharing so the
  // output does not depend on how rows are scheduled.
  CoefficientStream(uint64_t seed, uint64_t a, uint64_t b);

  // Uniform on [1, P-1].
  Fp nonzero(const PrimeField& field);
  // Uniform on [0, bound).
  uint64_t below(uint64_t bound);

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

std::vector<Share> make_shares(const PrimeField& field, Fp secret,
                               const SharingParams& params,
                               CoefficientStream& rng);

// Shares of a known public constant: a degree-0 polynomial, value c everywhere.
std::vector<Share> constant_shares(Fp value, int servers);

// Interpolates at 0. Throws kInsufficientShares when |shares| <= max degree
// and kDuplicateX on repeated x.
Fp reconstruct(const PrimeField& field, std::span<const Share> shares);

enum class QueryKind { kCount, kSelect, kFetch, kJoin, kRange };

// Minimal server count for one-round evaluation of `kind` over a unary word of
// `length` symbols (or a binary word of `length` bits for kRange) when data and
// query are shared with polynomials of degree `degree`.
int required_share_count(QueryKind kind, int length, int degree = 1);

enum class DegreeOp { kAdd, kMul };

int degree_after(DegreeOp op, int d1, int d2);

}  // namespace ssq
