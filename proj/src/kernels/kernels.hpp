#pragma once

// Row loops the engine spends its time in. The serial versions count every
// field operation as it happens and are the reference; the OpenMP versions
// accumulate lazily in 128 bits and report counts from closed forms. Both must
// agree on outputs and counts.

#include <cstddef>
#include <cstdint>

#include "ssq/field.hpp"

namespace ssq::kernels {

struct Counts {
  uint64_t adds = 0;
  uint64_t muls = 0;
};

// rows x cell_len elements, row-major; cell_len = symbols * alphabet.
struct CellMatrix {
  const Fp* data = nullptr;
  size_t rows = 0;
  size_t cell_len = 0;
  size_t alphabet = 0;
};

// 2's-complement words, `bits` elements per row, least-significant first.
struct BitMatrix {
  const Fp* data = nullptr;
  size_t rows = 0;
  size_t bits = 0;
};

// out[i] = prod_s sum_a cells[i][s][a] * word[s][a] for rows [0, rows).
using MatchFn = void (*)(const PrimeField&, const CellMatrix&, const Fp* word, Fp* out, Counts&);
// out[e] += sum_i weights[i] * data[i][e] for e in [0, width).
using WeightedSumFn = void (*)(const PrimeField&, const Fp* weights, const Fp* data, size_t rows,
                               size_t width, Fp* out, Counts&);
// out[i] = in-range mark of row i for bounds `low`, `high` (eq2), or the sum of
// both sign bits otherwise.
using RangeFn = void (*)(const PrimeField&, const BitMatrix&, const Fp* low, const Fp* high,
                         bool eq2, Fp* out, Counts&);

struct KernelSet {
  const char* name;
  MatchFn match_rows;
  WeightedSumFn weighted_sum;
  RangeFn range_marks;
};

const KernelSet& serial();
const KernelSet& parallel();

// Closed-form operation counts shared by tests and the parallel kernels.
Counts match_cost(size_t rows, size_t symbols, size_t alphabet);
Counts weighted_sum_cost(size_t rows, size_t width);
Counts sub_sign_cost(size_t bits);
Counts range_cost(size_t rows, size_t bits, bool eq2);

// Field operations that tally themselves; the serial kernels and the scalar
// engine paths are written against this.
struct CountingOps {
  const PrimeField& f;
  Counts& c;
  Fp add(Fp a, Fp b) const { ++c.adds; return f.add(a, b); }
  Fp sub(Fp a, Fp b) const { ++c.adds; return f.sub(a, b); }
  Fp mul(Fp a, Fp b) const { ++c.muls; return f.mul(a, b); }
};

struct PlainOps {
  const PrimeField& f;
  Fp add(Fp a, Fp b) const { return f.add(a, b); }
  Fp sub(Fp a, Fp b) const { return f.sub(a, b); }
  Fp mul(Fp a, Fp b) const { return f.mul(a, b); }
};

// Sign bit of B - A over bitwise shares, computed as B + ~A + 1 with a ripple
// of full adders. Needs bits >= 2.
template <class Ops>
Fp sub_sign(const Ops& ops, const Fp* a, const Fp* b, size_t bits) {
  const Fp one{1};
  Fp carry{0};
  for (size_t i = 0; i < bits; ++i) {
    const Fp na = ops.sub(one, a[i]);
    const Fp p = ops.mul(na, b[i]);
    if (i == 0) {
      // carry-in is 1, so the carry out is na OR b
      carry = ops.sub(ops.add(na, b[i]), p);
      continue;
    }
    const Fp rb = ops.sub(ops.add(na, b[i]), ops.add(p, p));
    if (i + 1 < bits) {
      carry = ops.add(p, ops.mul(carry, rb));
    } else {
      const Fp rc = ops.mul(rb, carry);
      return ops.sub(ops.add(rb, carry), ops.add(rc, rc));
    }
  }
  return carry;
}

}  // namespace ssq::kernels
