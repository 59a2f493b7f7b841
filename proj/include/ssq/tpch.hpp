#pragma once

// Small TPC-H-shaped tables for benchmarks and randomized workloads:
// Nation(NK, NE, RK), Customer(CK, CN, NK, MS), Supplier(SK, SN, NK).

#include <cstdint>

#include "ssq/owner.hpp"

namespace ssq {

inline constexpr size_t kMaxGeneratedRows = 100'000;

Relation make_nation();
// Throws kBadParams above kMaxGeneratedRows.
Relation make_customer(size_t rows, uint64_t seed);
Relation make_supplier(size_t rows, uint64_t seed);

}  // namespace ssq
