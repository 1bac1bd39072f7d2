#pragma once

// Seeded substreams and distribution draws. std::mt19937_64 is bit-portable
// across standard libraries, but std:: distributions are not, so every draw
// that ends up in an output file goes through the helpers below.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "refchoice/gaussian.hpp"

namespace refchoice {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent engine derived from a master seed and up to two stream tags
// (e.g. respondent id and a per-purpose tag).
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t tag1 = 0,
                                 std::uint64_t tag2 = 0) {
  return std::mt19937_64(mix64(seed + mix64(tag1 + mix64(tag2))));
}

// Uniform on (0,1), never exactly 0 or 1.
inline double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform_real(std::mt19937_64& rng, double a, double b) {
  return a + (b - a) * uniform01(rng);
}

// Uniform integer in [0, n) by rejection.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
  const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

// Standard normal via inverse CDF.
inline double normal(std::mt19937_64& rng) {
  return norm_quantile(uniform01(rng));
}

template <typename T>
void shuffle_inplace(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

// Index draw from a discrete distribution given by non-negative weights.
inline std::size_t categorical(std::mt19937_64& rng,
                               const std::vector<double>& probs) {
  double total = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("categorical: negative weight");
    total += p;
  }
  if (total <= 0.0) throw std::invalid_argument("categorical: zero total");
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    u -= probs[i];
    if (u <= 0.0) return i;
  }
  return probs.size() - 1;
}

}  // namespace refchoice
