#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace esv {

/// Uniform draw from [0, n) by rejection, so results depend only on the
/// mt19937_64 stream and not on the standard library's distribution guts.
inline uint64_t bounded_draw(std::mt19937_64& rng, uint64_t n) {
  const uint64_t threshold = (~n + 1) % n;
  for (;;) {
    uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

inline double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Box-Muller standard normal; self-contained so streams replay identically
/// across standard libraries.
inline double normal_draw(std::mt19937_64& rng) {
  double u1 = unit_draw(rng);
  while (u1 <= 0.0) u1 = unit_draw(rng);
  double u2 = unit_draw(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Fisher-Yates over the whole vector.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(bounded_draw(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

/// First k entries of a partial Fisher-Yates pass, i.e. a uniform sample of
/// k distinct indices from [0, n) in selection order.
inline std::vector<size_t> sample_without_replacement(size_t n, size_t k, std::mt19937_64& rng) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  if (k > n) k = n;
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + static_cast<size_t>(bounded_draw(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace esv
