#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace kerdisc {

/// Seed plus stream id. Identical (seed, stream) pairs reproduce identical
/// draws bit-exactly; distinct stream ids give statistically independent
/// streams, used to split randomness across tasks without sharing state.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  RngState with_stream(std::uint64_t s) const { return {seed, s}; }
};

namespace detail {

struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t s) : state(s) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

/// xoshiro256** seeded from (seed, stream) via SplitMix64. All floating-point
/// draws are built from the integer stream by fixed formulas, so sequences are
/// reproducible bit-exactly on any platform with IEEE doubles.
class RandomStream {
 public:
  explicit RandomStream(RngState st) {
    detail::SplitMix64 sm(st.seed ^ (st.stream * 0xD2B74407B1CE6E93ULL + 0x9E3779B97F4A7C15ULL));
    for (auto& w : s_) w = sm.next();
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1) — never returns 0, safe for logs.
  double uniform01_open() {
    double u;
    do {
      u = uniform01();
    } while (u == 0.0);
    return u;
  }

  /// Standard normal via Box-Muller (pair cached).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform01_open();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  /// Gamma(shape, scale), Marsaglia-Tsang; shape < 1 boosted via U^{1/shape}.
  double gamma(double shape, double scale) {
    if (shape <= 0.0 || scale <= 0.0) throw std::invalid_argument("gamma: shape and scale must be positive");
    if (shape < 1.0) {
      const double u = uniform01_open();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
  }

  double chi_square(double dof) { return gamma(0.5 * dof, 2.0); }

  /// Student-t with dof nu: N(0,1) / sqrt(chi2_nu / nu).
  double student_t(double nu) {
    const double z = normal();
    const double w = chi_square(nu);
    return z / std::sqrt(w / nu);
  }

 private:
  std::array<std::uint64_t, 4> s_{};
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace kerdisc
