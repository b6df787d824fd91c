#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace sparsegap {

// C(n, k), saturating at cap instead of overflowing.
inline std::uint64_t binomial(
    std::uint64_t n, std::uint64_t k,
    std::uint64_t cap = std::numeric_limits<std::uint64_t>::max()) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // c * (n - k + i) / i is exact at every step.
    unsigned __int128 wide = static_cast<unsigned __int128>(c) * (n - k + i) / i;
    if (wide >= cap) return cap;
    c = static_cast<std::uint64_t>(wide);
  }
  return c;
}

// Visits all k-subsets of {0..n-1} in lexicographic order. fn returns false
// to stop early. Returns the number of subsets visited.
template <class Fn>
std::uint64_t for_each_combination(int n, int k, Fn&& fn) {
  if (k < 0 || k > n) return 0;
  std::vector<int> c(k);
  for (int i = 0; i < k; ++i) c[i] = i;
  std::uint64_t visited = 0;
  while (true) {
    ++visited;
    if (!fn(static_cast<const std::vector<int>&>(c))) return visited;
    // Advance: rightmost index that can still move.
    int i = k - 1;
    while (i >= 0 && c[i] == n - k + i) --i;
    if (i < 0) return visited;
    ++c[i];
    for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
  }
}

}  // namespace sparsegap
