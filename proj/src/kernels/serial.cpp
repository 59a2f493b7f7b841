#include "kernels.hpp"

namespace ssq::kernels {
namespace {

void match_rows(const PrimeField& f, const CellMatrix& m, const Fp* word, Fp* out, Counts& c) {
  const CountingOps ops{f, c};
  const size_t symbols = m.alphabet == 0 ? 0 : m.cell_len / m.alphabet;
  for (size_t i = 0; i < m.rows; ++i) {
    const Fp* cell = m.data + i * m.cell_len;
    Fp acc{1};
    for (size_t s = 0; s < symbols; ++s) {
      const Fp* u = cell + s * m.alphabet;
      const Fp* v = word + s * m.alphabet;
      Fp n = ops.mul(u[0], v[0]);
      for (size_t a = 1; a < m.alphabet; ++a) n = ops.add(n, ops.mul(u[a], v[a]));
      acc = s == 0 ? n : ops.mul(acc, n);
    }
    out[i] = acc;
  }
}

void weighted_sum(const PrimeField& f, const Fp* weights, const Fp* data, size_t rows,
                  size_t width, Fp* out, Counts& c) {
  const CountingOps ops{f, c};
  for (size_t i = 0; i < rows; ++i) {
    const Fp* row = data + i * width;
    for (size_t e = 0; e < width; ++e) out[e] = ops.add(out[e], ops.mul(weights[i], row[e]));
  }
}

void range_marks(const PrimeField& f, const BitMatrix& m, const Fp* low, const Fp* high, bool eq2,
                 Fp* out, Counts& c) {
  const CountingOps ops{f, c};
  for (size_t i = 0; i < m.rows; ++i) {
    const Fp* x = m.data + i * m.bits;
    const Fp below = sub_sign(ops, low, x, m.bits);   // sign(x - a)
    const Fp above = sub_sign(ops, x, high, m.bits);  // sign(b - x)
    const Fp outside = ops.add(below, above);
    out[i] = eq2 ? ops.sub(Fp{1}, outside) : outside;
  }
}

}  // namespace

const KernelSet& serial() {
  static const KernelSet k{"serial", match_rows, weighted_sum, range_marks};
  return k;
}

}  // namespace ssq::kernels
