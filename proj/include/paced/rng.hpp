#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace paced {

/// Finalizer from splitmix64. Bijective on 64-bit ints, good avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// Folds an ordered tuple of 64-bit parts into one stream key.
/// Order-sensitive: derive_key({a,b}) != derive_key({b,a}) in general.
inline std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t k = 0x243f6a8885a308d3ULL;  // pi fractional bits, arbitrary fixed basis
  for (std::uint64_t p : parts) k = mix64((k ^ p) + kGolden);
  return k;
}

/**
 * Counter-based deterministic random stream.
 *
 * Output i is mix64(key + (i+1) * golden), so the sequence for a given key is
 * a pure function of (key, draw index): no hidden state beyond the counter,
 * identical on every platform (integer ops and IEEE doubles only), and streams
 * with distinct keys are independent for practical purposes.
 */
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double next_unit_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). Modulo bias is < n/2^64, negligible here.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("next_below: n must be positive");
    return next_u64() % n;
  }

  /// Standard normal via Box-Muller (cosine branch).
  double next_gaussian() {
    double u1 = next_unit_open();
    double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Floyd's algorithm: k distinct integers from [0, n), returned sorted.
/// Deterministic in the stream; O(k) draws, no O(n) scratch.
inline std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n,
                                                             std::uint64_t k,
                                                             RngStream& rng) {
  if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(k) * 2 + 1);
  for (std::uint64_t j = n - k; j < n; ++j) {
    std::uint64_t t = rng.next_below(j + 1);
    chosen.insert(chosen.count(t) ? j : t);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace paced
