#include "ssq/sss.hpp"

#include <algorithm>
#include <string>

#include "ssq/error.hpp"

namespace ssq {

void SharingParams::validate() const {
  if (degree < 1) {
    throw Error(ErrorCode::kBadParams, "sharing degree must be >= 1");
  }
  if (servers < degree + 1) {
    throw Error(ErrorCode::kBadParams,
                std::to_string(servers) + " servers cannot hold degree-" +
                    std::to_string(degree) + " shares");
  }
  PrimeField check(prime);
  if (static_cast<uint64_t>(servers) >= prime) {
    throw Error(ErrorCode::kBadParams, "more servers than field elements");
  }
}

CoefficientStream::CoefficientStream(std::optional<uint64_t> seed) {
  if (seed) {
    rng_.seed(*seed);
  } else {
    std::random_device rd;
    std::seed_seq seq{rd(), rd(), rd(), rd()};
    rng_.seed(seq);
  }
}

CoefficientStream::CoefficientStream(uint64_t seed, uint64_t a, uint64_t b) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(a), static_cast<uint32_t>(a >> 32),
                    static_cast<uint32_t>(b), static_cast<uint32_t>(b >> 32)};
  rng_.seed(seq);
}

Fp CoefficientStream::nonzero(const PrimeField& field) {
  std::uniform_int_distribution<uint64_t> dist(1, field.modulus() - 1);
  return Fp{dist(rng_)};
}

uint64_t CoefficientStream::below(uint64_t bound) {
  std::uniform_int_distribution<uint64_t> dist(0, bound - 1);
  return dist(rng_);
}

std::vector<Share> make_shares(const PrimeField& field, Fp secret,
                               const SharingParams& params,
                               CoefficientStream& rng) {
  if (params.servers < params.degree + 1 || params.degree < 1) {
    throw Error(ErrorCode::kBadParams, "servers < degree + 1");
  }
  // coefficients a_1..a_d; a_0 = secret
  std::vector<Fp> coeffs(static_cast<size_t>(params.degree));
  for (auto& a : coeffs) a = rng.nonzero(field);

  std::vector<Share> shares(static_cast<size_t>(params.servers));
  for (int k = 1; k <= params.servers; ++k) {
    const Fp x{static_cast<uint64_t>(k)};
    Fp acc{0};
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
      acc = field.add(field.mul(acc, x), *it);
    }
    acc = field.add(field.mul(acc, x), field.from_uint(secret.v));
    shares[k - 1] = Share{static_cast<uint32_t>(k), acc, params.degree};
  }
  return shares;
}

std::vector<Share> constant_shares(Fp value, int servers) {
  std::vector<Share> shares(static_cast<size_t>(servers));
  for (int k = 1; k <= servers; ++k) {
    shares[k - 1] = Share{static_cast<uint32_t>(k), value, 0};
  }
  return shares;
}

Fp reconstruct(const PrimeField& field, std::span<const Share> shares) {
  int max_degree = 0;
  for (const auto& s : shares) max_degree = std::max(max_degree, s.degree);
  if (shares.size() <= static_cast<size_t>(max_degree)) {
    throw Error(ErrorCode::kInsufficientShares,
                std::to_string(shares.size()) + " shares for degree " +
                    std::to_string(max_degree));
  }
  std::vector<std::pair<Fp, Fp>> points;
  points.reserve(shares.size());
  for (const auto& s : shares) points.emplace_back(Fp{s.x}, s.value);
  return field.interpolate_at_zero(points);
}

int required_share_count(QueryKind kind, int length, int degree) {
  switch (kind) {
    case QueryKind::kCount:
      // product of `length` inner products, each of degree 2d
      return 2 * length * degree + 1;
    case QueryKind::kSelect:
    case QueryKind::kFetch:
    case QueryKind::kJoin:
      // the match bit is multiplied once more by a degree-d payload share
      return 2 * length * degree + degree + 1;
    case QueryKind::kRange:
      // the sign bit of a t-bit ripple-carry subtraction has degree 2td
      return 2 * length * degree + 1;
  }
  return 0;
}

int degree_after(DegreeOp op, int d1, int d2) {
  return op == DegreeOp::kAdd ? std::max(d1, d2) : d1 + d2;
}

}  // namespace ssq
