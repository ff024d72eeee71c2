#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace trajpred {

// Deterministic parallel reduction. Items are processed in fixed-size blocks
// and block partials are combined in block order, so the result is identical
// for any thread count (including 1) and any schedule. add_item(i, acc) must
// add item i's contribution into acc[0..dim).
inline constexpr std::size_t kReduceBlock = 64;

template <typename AddItem>
void block_reduce(std::size_t n, std::size_t dim, double* out, AddItem&& add_item) {
  if (n == 0) return;
  const std::size_t nblocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partials(nblocks * dim, 0.0);
#pragma omp parallel for schedule(static)
  for (long long b = 0; b < static_cast<long long>(nblocks); ++b) {
    double* acc = partials.data() + static_cast<std::size_t>(b) * dim;
    const std::size_t lo = static_cast<std::size_t>(b) * kReduceBlock;
    const std::size_t hi = std::min(n, lo + kReduceBlock);
    for (std::size_t i = lo; i < hi; ++i) add_item(i, acc);
  }
  for (std::size_t b = 0; b < nblocks; ++b) {
    const double* acc = partials.data() + b * dim;
    for (std::size_t k = 0; k < dim; ++k) out[k] += acc[k];
  }
}

// Scalar convenience wrapper.
template <typename ItemValue>
double block_sum(std::size_t n, ItemValue&& value_of) {
  double s = 0.0;
  block_reduce(n, 1, &s, [&](std::size_t i, double* acc) { acc[0] += value_of(i); });
  return s;
}

}  // namespace trajpred
