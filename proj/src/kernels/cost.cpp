#include "kernels.hpp"

namespace ssq::kernels {

Counts match_cost(size_t rows, size_t symbols, size_t alphabet) {
  if (symbols == 0 || alphabet == 0) return {};
  return {rows * symbols * (alphabet - 1), rows * (symbols * alphabet + symbols - 1)};
}

Counts weighted_sum_cost(size_t rows, size_t width) {
  return {rows * width, rows * width};
}

Counts sub_sign_cost(size_t bits) {
  return {5 * bits, 2 * bits - 1};
}

Counts range_cost(size_t rows, size_t bits, bool eq2) {
  const Counts s = sub_sign_cost(bits);
  return {rows * (2 * s.adds + (eq2 ? 2 : 1)), rows * 2 * s.muls};
}

}  // namespace ssq::kernels
