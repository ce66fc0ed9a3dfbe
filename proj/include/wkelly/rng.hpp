#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "wkelly/errors.hpp"

namespace wkelly {

/// Deterministic 64-bit generator (splitmix64). Used everywhere randomness is
/// needed so that results are identical across platforms, standard libraries,
/// and thread counts. Substreams are derived from (seed, index) pairs, which
/// makes per-trial streams independent of execution order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Counter-based substream: a fresh generator keyed by (seed, index).
  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    Rng mixer(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    std::uint64_t s = mixer.next_u64();
    s ^= mixer.next_u64() << 1;
    return Rng(s);
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0,1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo is fine here: n is tiny relative to 2^64.
    return next_u64() % n;
  }

  /// Standard normal via Box-Muller (no state cached, deterministic).
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  /// Exponential with rate 1.
  double exponential() {
    double u = uniform01();
    while (u <= 0.0) u = uniform01();
    return -std::log(u);
  }

  /// Student-t with 4 degrees of freedom: Z / sqrt(chi2_4 / 4),
  /// chi2_4 = 2*(E1 + E2).
  double student_t4() {
    const double z = normal();
    const double chi2 = 2.0 * (exponential() + exponential());
    return z / std::sqrt(chi2 / 4.0);
  }

  /// k distinct indices drawn uniformly from {0,...,n-1} (partial
  /// Fisher-Yates); result is in draw order.
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k > n || k < 0) throw ValidationError("sample_without_replacement: k must be in [0,n]");
    std::vector<int> pool(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
    std::vector<int> out;
    out.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
      const auto j = static_cast<size_t>(i) + static_cast<size_t>(below(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[static_cast<size_t>(i)], pool[j]);
      out.push_back(pool[static_cast<size_t>(i)]);
    }
    return out;
  }

 private:
  std::uint64_t state_;
};

}  // namespace wkelly
