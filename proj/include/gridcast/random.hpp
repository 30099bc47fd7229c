#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

namespace gridcast {

// std::mt19937_64 output is fixed by the standard, the <random> distributions
// are not. These helpers map engine output to values explicitly so seeded
// runs are reproducible across standard libraries.

inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(rng);
}

// Index in [0, n). n must be > 0.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n)) % n;
}

// Box-Muller standard normal.
inline double standard_normal(std::mt19937_64& rng) {
  double u1 = unit_uniform(rng);
  while (u1 <= 0.0) u1 = unit_uniform(rng);
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <typename Container>
void shuffle_in_place(Container& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(a) ^ (b + 0x632be59bd9b4e019ULL));
}

}  // namespace gridcast
