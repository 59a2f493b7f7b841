#include <omp.h>

#include <vector>

#include "kernels.hpp"

namespace ssq::kernels {
namespace {

using u128 = unsigned __int128;

void match_rows(const PrimeField& f, const CellMatrix& m, const Fp* word, Fp* out, Counts& c) {
  const uint64_t p = f.modulus();
  const size_t symbols = m.alphabet == 0 ? 0 : m.cell_len / m.alphabet;
  const int64_t rows = static_cast<int64_t>(m.rows);
#pragma omp parallel for schedule(static)
  for (int64_t ii = 0; ii < rows; ++ii) {
    const Fp* cell = m.data + static_cast<size_t>(ii) * m.cell_len;
    uint64_t acc = 1;
    for (size_t s = 0; s < symbols; ++s) {
      const Fp* u = cell + s * m.alphabet;
      const Fp* v = word + s * m.alphabet;
      u128 n = 0;
      for (size_t a = 0; a < m.alphabet; ++a) n += static_cast<u128>(u[a].v) * v[a].v;
      acc = static_cast<uint64_t>((static_cast<u128>(acc) * static_cast<uint64_t>(n % p)) % p);
    }
    out[ii] = Fp{acc};
  }
  const Counts k = match_cost(m.rows, symbols, m.alphabet);
  c.adds += k.adds;
  c.muls += k.muls;
}

void weighted_sum(const PrimeField& f, const Fp* weights, const Fp* data, size_t rows,
                  size_t width, Fp* out, Counts& c) {
  const uint64_t p = f.modulus();
  // products are < 2^64, so 2^64 of them fit in 128 bits
  std::vector<u128> total(width, 0);
#pragma omp parallel
  {
    std::vector<u128> local(width, 0);
#pragma omp for schedule(static) nowait
    for (int64_t ii = 0; ii < static_cast<int64_t>(rows); ++ii) {
      const uint64_t w = weights[ii].v;
      const Fp* row = data + static_cast<size_t>(ii) * width;
      for (size_t e = 0; e < width; ++e) local[e] += static_cast<u128>(w) * row[e].v;
    }
#pragma omp critical
    for (size_t e = 0; e < width; ++e) total[e] += local[e] % p;
  }
  for (size_t e = 0; e < width; ++e) out[e] = f.add(out[e], Fp{static_cast<uint64_t>(total[e] % p)});
  const Counts k = weighted_sum_cost(rows, width);
  c.adds += k.adds;
  c.muls += k.muls;
}

void range_marks(const PrimeField& f, const BitMatrix& m, const Fp* low, const Fp* high, bool eq2,
                 Fp* out, Counts& c) {
  const PlainOps ops{f};
#pragma omp parallel for schedule(static)
  for (int64_t ii = 0; ii < static_cast<int64_t>(m.rows); ++ii) {
    const Fp* x = m.data + static_cast<size_t>(ii) * m.bits;
    const Fp outside = f.add(sub_sign(ops, low, x, m.bits), sub_sign(ops, x, high, m.bits));
    out[ii] = eq2 ? f.sub(Fp{1}, outside) : outside;
  }
  const Counts k = range_cost(m.rows, m.bits, eq2);
  c.adds += k.adds;
  c.muls += k.muls;
}

}  // namespace

const KernelSet& parallel() {
  static const KernelSet k{"openmp", match_rows, weighted_sum, range_marks};
  return k;
}

}  // namespace ssq::kernels
