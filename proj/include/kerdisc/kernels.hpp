#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerdisc/bessel.hpp"
#include "kerdisc/errors.hpp"
#include "kerdisc/kummer.hpp"
#include "kerdisc/types.hpp"

namespace kerdisc {

/// Tagged base-kernel choice with shape parameters.
///   Gaussian: exp(-gamma r^2)
///   Imq:      (1 + alpha r^2)^{-beta}
///   Kummer:   M(1/2; d/2; -gamma r^2), the infinite-slice Gaussian average
///   Vmf:      exp(kappa x.y) on the unit sphere
struct KernelSpec {
  enum class Kind { Gaussian, Imq, Kummer, Vmf };
  Kind kind = Kind::Gaussian;
  double gamma = 1.0;
  double alpha = 1.0;
  double beta = 0.5;
  double kappa = 1.0;
  std::size_t dim = 0;  // Kummer only
  KummerMode mode = KummerMode::Exact;

  static KernelSpec gaussian(double gamma) {
    if (!(gamma > 0)) throw std::invalid_argument("KernelSpec: gamma must be > 0");
    KernelSpec k;
    k.kind = Kind::Gaussian;
    k.gamma = gamma;
    return k;
  }
  static KernelSpec imq(double alpha, double beta) {
    if (!(alpha > 0) || !(beta > 0)) throw std::invalid_argument("KernelSpec: alpha, beta must be > 0");
    KernelSpec k;
    k.kind = Kind::Imq;
    k.alpha = alpha;
    k.beta = beta;
    return k;
  }
  static KernelSpec kummer(double gamma, std::size_t d, KummerMode mode = KummerMode::Exact) {
    if (!(gamma > 0)) throw std::invalid_argument("KernelSpec: gamma must be > 0");
    if (d == 0) throw std::invalid_argument("KernelSpec: Kummer kernel needs d >= 1");
    KernelSpec k;
    k.kind = Kind::Kummer;
    k.gamma = gamma;
    k.dim = d;
    k.mode = mode;
    return k;
  }
  static KernelSpec vmf(double kappa) {
    if (!(kappa > 0)) throw std::invalid_argument("KernelSpec: kappa must be > 0");
    KernelSpec k;
    k.kind = Kind::Vmf;
    k.kappa = kappa;
    return k;
  }
};

namespace detail {

inline void check_dims(const KernelSpec& k, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("kernel: dimension mismatch");
  if (k.kind == KernelSpec::Kind::Kummer && x.size() != k.dim)
    throw std::invalid_argument("kernel: input dimension != Kummer kernel d");
  if (k.kind == KernelSpec::Kind::Vmf) {
    if (std::abs(norm(x) - 1.0) > 1e-9 || std::abs(norm(y) - 1.0) > 1e-9)
      throw std::invalid_argument("kernel: vMF inputs must lie on the unit sphere");
  }
}

}  // namespace detail

inline double kernel_eval(const KernelSpec& k, std::span<const double> x, std::span<const double> y) {
  detail::check_dims(k, x, y);
  switch (k.kind) {
    case KernelSpec::Kind::Gaussian:
      return std::exp(-k.gamma * detail::sq_distance(x, y));
    case KernelSpec::Kind::Imq:
      return std::pow(1.0 + k.alpha * detail::sq_distance(x, y), -k.beta);
    case KernelSpec::Kind::Kummer:
      return kummer_half_d(k.gamma * detail::sq_distance(x, y), k.dim, k.mode);
    case KernelSpec::Kind::Vmf:
      return std::exp(k.kappa * detail::dot(x, y));
  }
  throw std::logic_error("kernel_eval: unreachable");
}

/// Gradient in the first argument; radial kernels are odd: grad_x k = -grad_y k.
inline std::vector<double> kernel_grad_x(const KernelSpec& k, std::span<const double> x,
                                         std::span<const double> y) {
  detail::check_dims(k, x, y);
  const std::size_t d = x.size();
  std::vector<double> g(d);
  if (k.kind == KernelSpec::Kind::Gaussian) {
    const double e = std::exp(-k.gamma * detail::sq_distance(x, y));
    for (std::size_t i = 0; i < d; ++i) g[i] = -2.0 * k.gamma * (x[i] - y[i]) * e;
    return g;
  }
  if (k.kind == KernelSpec::Kind::Imq) {
    const double base = 1.0 + k.alpha * detail::sq_distance(x, y);
    const double f = -2.0 * k.alpha * k.beta * std::pow(base, -(k.beta + 1.0));
    for (std::size_t i = 0; i < d; ++i) g[i] = f * (x[i] - y[i]);
    return g;
  }
  throw unsupported_operation("kernel_grad_x: only Gaussian and IMQ kernels");
}

/// tr(grad_x grad_y^T k). For IMQ this is the full trace
///   2 a b d (1+a r^2)^{-(b+1)} - 4 a^2 b (b+1) r^2 (1+a r^2)^{-(b+2)},
/// validated against finite differences of kernel_eval.
inline double kernel_trace_hessian(const KernelSpec& k, std::span<const double> x,
                                   std::span<const double> y) {
  detail::check_dims(k, x, y);
  const double d = static_cast<double>(x.size());
  const double r2 = detail::sq_distance(x, y);
  if (k.kind == KernelSpec::Kind::Gaussian)
    return (2.0 * k.gamma * d - 4.0 * k.gamma * k.gamma * r2) * std::exp(-k.gamma * r2);
  if (k.kind == KernelSpec::Kind::Imq) {
    const double base = 1.0 + k.alpha * r2;
    return 2.0 * k.alpha * k.beta * d * std::pow(base, -(k.beta + 1.0)) -
           4.0 * k.alpha * k.alpha * k.beta * (k.beta + 1.0) * r2 * std::pow(base, -(k.beta + 2.0));
  }
  throw unsupported_operation("kernel_trace_hessian: only Gaussian and IMQ kernels");
}

/// Bochner spectral density rho_k(omega). Gaussian integrates to 1 over R^d;
/// IMQ at omega = 0 is the small-argument K_nu limit when beta > d/2 and a
/// range error otherwise (the density diverges there).
inline double spectral_density(const KernelSpec& k, std::span<const double> omega) {
  const double d = static_cast<double>(omega.size());
  if (omega.empty()) throw std::invalid_argument("spectral_density: empty omega");
  const double w = detail::norm(omega);
  if (k.kind == KernelSpec::Kind::Gaussian) {
    return std::pow(4.0 * M_PI * k.gamma, -0.5 * d) * std::exp(-w * w / (4.0 * k.gamma));
  }
  if (k.kind == KernelSpec::Kind::Imq) {
    const double nu = k.beta - 0.5 * d;
    const double c0 = std::exp((1.0 - 0.5 * d) * detail::kLn2 - std::lgamma(k.beta) -
                               0.5 * d * std::log(2.0 * M_PI * k.alpha));
    if (w == 0.0) {
      if (nu <= 0.0)
        throw std::range_error("spectral_density: IMQ density diverges at omega = 0 for beta <= d/2");
      return c0 * 0.5 * std::exp(std::lgamma(nu));
    }
    const double arg = w / std::sqrt(k.alpha);
    return c0 * std::pow(0.5 * arg, nu) * bessel_k(nu, arg);
  }
  throw unsupported_operation("spectral_density: only Gaussian and IMQ kernels");
}

/// Median pairwise squared distance, the usual bandwidth heuristic.
/// Utility only; no result in this library depends on it.
inline double median_sq_distance(const SampleBatch& X) {
  if (X.n < 2) throw std::invalid_argument("median_sq_distance: need n >= 2");
  std::vector<double> d2;
  d2.reserve(X.n * (X.n - 1) / 2);
  for (std::size_t i = 0; i < X.n; ++i)
    for (std::size_t j = i + 1; j < X.n; ++j) d2.push_back(detail::sq_distance(X.row(i), X.row(j)));
  const std::size_t mid = d2.size() / 2;
  std::nth_element(d2.begin(), d2.begin() + mid, d2.end());
  return d2[mid];
}

}  // namespace kerdisc
