#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "kerdisc/errors.hpp"

namespace kerdisc {

/// How to evaluate M(1/2; d/2; -c): exact series, or the inverse-multiquadric
/// surrogate (1 + 4c/(2d-3))^{-1/2} valid for large d (requires d >= 4).
enum class KummerMode { Exact, ImqApprox };

namespace detail {

constexpr double kLn2 = 0.69314718055994530941723212145818;

/// Asymptotic expansion of M(a;b;z) for z -> -inf:
///   Gamma(b)/Gamma(b-a) * (-z)^{-a} * sum_k (a)_k (a-b+1)_k / (k! z^k).
/// Returns false when optimal truncation cannot reach tol (caller falls back).
inline bool kummer_asymptotic(double a, double b, double z, double& out) {
  const double x = -z;
  double term = 1.0, sum = 1.0;
  double prev = std::abs(term);
  for (int k = 0; k < 300; ++k) {
    term *= (a + k) * (a - b + 1.0 + k) / ((k + 1.0) * z);
    const double mag = std::abs(term);
    if (mag >= prev) return false;  // series started diverging before tol
    sum += term;
    prev = mag;
    if (mag < 1e-14 * std::abs(sum)) {
      out = std::exp(std::lgamma(b) - std::lgamma(b - a) - a * std::log(x)) * sum;
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Kummer confluent hypergeometric M(a; b; z) for z <= 0, b > 0.
///
/// Uses the transformation M(a;b;z) = e^z M(b-a;b;-z): for b > a the
/// transformed series has all-positive terms, so there is no cancellation for
/// large negative z. The accumulation carries an explicit binary exponent, so
/// intermediate e^{-z} growth cannot overflow; for very large |z| the
/// standard large-argument expansion is used instead when it converges.
inline double kummer_m(double a, double b, double z) {
  if (!(b > 0.0)) throw std::invalid_argument("kummer_m: b must be > 0");
  if (z > 0.0) throw std::invalid_argument("kummer_m: only z <= 0 is supported");
  if (z == 0.0 || a == 0.0) return 1.0;
  if (a == b) return std::exp(z);

  const double x = -z;
  if (x > 700.0) {
    double v;
    if (detail::kummer_asymptotic(a, b, z, v)) return v;
  }

  const double num = b - a;
  if (num < 0.0) {
    // a > b never arises from the estimators; direct series suffices for
    // the small |z| this is exercised with.
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < 10000; ++k) {
      term *= (a + k) * z / ((b + k) * (k + 1.0));
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) return sum;
    }
    throw numerical_error("kummer_m: series for a > b did not converge");
  }

  double term = 1.0, sum = 1.0;
  double log_scale = 0.0;
  const std::size_t kmax = 1000000;
  for (std::size_t k = 0; k < kmax; ++k) {
    const double ratio = (num + k) * x / ((b + k) * (k + 1.0));
    term *= ratio;
    sum += term;
    if (ratio < 1.0 && term < 1e-17 * sum) break;
    if (sum > 1e280) {
      sum = std::ldexp(sum, -512);
      term = std::ldexp(term, -512);
      log_scale += 512.0 * detail::kLn2;
    }
  }
  return std::exp(z + std::log(sum) + log_scale);
}

/// M(1/2; d/2; -c) for c >= 0: the infinite-slice average of the Gaussian
/// kernel over sphere directions. ImqApprox replaces it by the IMQ surrogate.
inline double kummer_half_d(double c, std::size_t d, KummerMode mode) {
  if (c < 0.0) throw std::invalid_argument("kummer_half_d: c must be >= 0");
  if (d == 0) throw std::invalid_argument("kummer_half_d: d must be >= 1");
  if (mode == KummerMode::ImqApprox) {
    if (d < 4) throw std::invalid_argument("kummer_half_d: ImqApprox requires d >= 4");
    return 1.0 / std::sqrt(1.0 + 4.0 * c / (2.0 * static_cast<double>(d) - 3.0));
  }
  return kummer_m(0.5, 0.5 * static_cast<double>(d), -c);
}

}  // namespace kerdisc
