#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace odp {

/// Deterministic random stream. All randomness in the project flows from a
/// single root seed through named substreams, so individual consumers
/// (dataset, shuffle, donor, ...) can be varied independently without
/// perturbing each other.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1). 53-bit mantissa.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). Unbiased via rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  /// Standard normal via Box-Muller. No cached spare: two uniforms are
  /// consumed per draw so the stream position is input-independent.
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

namespace detail {
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Derive a named substream from a root seed. `salt` distinguishes repeated
/// uses of the same name (per-epoch shuffles, per-image noise, ...).
inline Rng substream(std::uint64_t root_seed, std::string_view name,
                     std::uint64_t salt = 0) {
  std::uint64_t h = detail::splitmix64(root_seed ^ detail::fnv1a64(name));
  h = detail::splitmix64(h ^ salt);
  return Rng(h);
}

/// Uniform permutation of 0..n-1 with no fixed point (rejection-sampled
/// Fisher-Yates). Used for donor sampling, which must guarantee z' != z.
inline std::vector<int> derangement(Rng& rng, int n) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  while (true) {
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j =
          static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(j)]);
    }
    bool has_fixed_point = false;
    for (int i = 0; i < n; ++i) {
      if (perm[static_cast<std::size_t>(i)] == i) {
        has_fixed_point = true;
        break;
      }
    }
    if (!has_fixed_point) return perm;
  }
}

}  // namespace odp
