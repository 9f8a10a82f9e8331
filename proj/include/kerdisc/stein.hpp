#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kerdisc/kernels.hpp"
#include "kerdisc/mmd.hpp"
#include "kerdisc/parallel.hpp"
#include "kerdisc/priors.hpp"
#include "kerdisc/quadrature.hpp"
#include "kerdisc/types.hpp"

namespace kerdisc {

/// Base kernel (Gaussian or IMQ) plus the prior supplying the score.
struct SteinKernelSpec {
  KernelSpec base;
  PriorSpec prior;
};

/// Langevin Stein kernel
///   k_st(x,y) = s(x)^T k s(y) + s(x)^T grad_y k + grad_x k^T s(y) + tr(grad_x grad_y^T k),
/// assembled from the kernel table and the prior score. Radial kernels give
/// grad_y k = -grad_x k. A degenerate Laplace score at the origin is
/// propagated through *degenerate.
inline double stein_kernel_eval(const SteinKernelSpec& s, std::span<const double> x,
                                std::span<const double> y, bool* degenerate = nullptr) {
  if (x.size() != y.size() || x.size() != s.prior.d)
    throw std::invalid_argument("stein_kernel_eval: dimension mismatch");
  const std::vector<double> sx = score(s.prior, x, degenerate);
  const std::vector<double> sy = score(s.prior, y, degenerate);
  const double k = kernel_eval(s.base, x, y);
  const std::vector<double> gx = kernel_grad_x(s.base, x, y);
  double sxsy = 0.0, sxg = 0.0, gsy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxsy += sx[i] * sy[i];
    sxg += sx[i] * gx[i];
    gsy += gx[i] * sy[i];
  }
  return sxsy * k - sxg + gsy + kernel_trace_hessian(s.base, x, y);
}

/// Squared KSD estimate: pair mean of the Stein kernel (diagonal-free in the
/// U form). Zero in expectation when X is drawn from the prior.
inline DiscrepancyEstimate ksd_u_statistic(const SteinKernelSpec& s, const SampleBatch& X,
                                           StatForm form = StatForm::UStatistic) {
  if (X.n < 2) throw std::invalid_argument("ksd_u_statistic: need n >= 2");
  if (X.d != s.prior.d) throw std::invalid_argument("ksd_u_statistic: dimension mismatch");
  const double n = static_cast<double>(X.n);
  const double pairs = 2.0 * detail::pair_sum(X.n, [&](std::size_t i, std::size_t j) {
    return stein_kernel_eval(s, X.row(i), X.row(j));
  });
  double value;
  if (form == StatForm::UStatistic) {
    value = pairs / (n * (n - 1.0));
  } else {
    double diag = 0.0;
    for (std::size_t i = 0; i < X.n; ++i) diag += stein_kernel_eval(s, X.row(i), X.row(i));
    value = (pairs + diag) / (n * n);
  }
  detail::require_finite(value, "ksd_u_statistic");
  return {value, "ksd", X.n, X.d, 0, 0, 0, 0.0};
}

/// One-dimensional Gaussian-kernel Stein kernel against N(0, sigma^2):
///   (uv/s^4 - (2g/s^2 + 4g^2)(u-v)^2 + 2g) exp(-g (u-v)^2).
/// The per-slice ground truth for the sliced KSD oracles.
inline double gaussian_stein_kernel_1d(double gamma, double sigma, double u, double v) {
  const double s2 = sigma * sigma;
  const double du = u - v;
  return (u * v / (s2 * s2) - (2.0 * gamma / s2 + 4.0 * gamma * gamma) * du * du + 2.0 * gamma) *
         std::exp(-gamma * du * du);
}

/// Spectral (V-form) squared KSD in one dimension: quadrature over the
/// Gaussian spectral density (knots rescaled by sqrt(2 gamma)) of
/// |mean_i (s(x_i) + i w) e^{i w x_i}|^2. The prior supplies the 1-D score
/// (Gaussian or Laplace).
inline DiscrepancyEstimate ksd_spectral_1d(const PriorSpec& p, const SampleBatch& X1, double gamma,
                                           const QuadratureRule& rule) {
  if (X1.d != 1) throw std::invalid_argument("ksd_spectral_1d: batch must be one-dimensional");
  if (!(gamma > 0)) throw std::invalid_argument("ksd_spectral_1d: gamma must be > 0");
  if (rule.size() == 0) throw std::invalid_argument("ksd_spectral_1d: empty rule");
  const double n = static_cast<double>(X1.n);
  std::vector<double> sc(X1.n);
  for (std::size_t i = 0; i < X1.n; ++i) sc[i] = score_slice(p, X1.data[i]);
  double value = 0.0;
  for (std::size_t u = 0; u < rule.size(); ++u) {
    const double omega = detail::quadrature_omega(gamma, rule.knots[u]);
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < X1.n; ++i) {
      const double a = omega * X1.data[i];
      const double c = std::cos(a), si = std::sin(a);
      re += sc[i] * c - omega * si;
      im += sc[i] * si + omega * c;
    }
    re /= n;
    im /= n;
    value += rule.weights[u] * (re * re + im * im);
  }
  detail::require_finite(value, "ksd_spectral_1d");
  return {value, "ksd-spectral", X1.n, 1, 0, rule.size(), 0, 0.0};
}

namespace detail {

/// IMQ-style tail surrogate for M(3/2; b; -c): (1 + t c)^{-3/2} with t chosen
/// so the polynomial tails match, t = (Gamma(b-3/2)/Gamma(b))^{2/3}.
inline double kummer_three_half_surrogate(double c, double b) {
  const double t = std::exp(2.0 / 3.0 * (std::lgamma(b - 1.5) - std::lgamma(b)));
  return std::pow(1.0 + t * c, -1.5);
}

struct SlicedKsdTerms {
  double gamma, sigma, d;
  KummerMode mode;
  bool approx_m2;

  double pair(std::span<const double> xi, std::span<const double> xj) const {
    const double s2 = sigma * sigma;
    const double s4 = s2 * s2;
    const double r2 = sq_distance(xi, xj);
    if (r2 < 1e-24) {
      // limit of the three terms as x_j -> x_i; the unit-direction dependence
      // cancels in the sum, leaving 2 gamma + |x|^2 / (d sigma^4)
      return 2.0 * gamma + dot(xi, xi) / (d * s4);
    }
    const double r = std::sqrt(r2);
    double a1 = 0.0, a2 = 0.0, xx = 0.0;
    for (std::size_t k = 0; k < xi.size(); ++k) {
      const double e = (xi[k] - xj[k]) / r;
      a1 += e * xi[k];
      a2 += e * xj[k];
      xx += xi[k] * xj[k];
    }
    const std::size_t du = static_cast<std::size_t>(d);
    const double m1 = kummer_half_d(gamma * r2, du, mode);
    const double m2 = approx_m2 ? kummer_three_half_surrogate(gamma * r2, 0.5 * d + 1.0)
                                : kummer_m(1.5, 0.5 * d + 1.0, -gamma * r2);
    const double crossperp = (xx - a1 * a2) / (s4 * (d - 1.0));
    const double term1 = (2.0 * gamma + crossperp) * m1;
    const double term2 = (a1 * a2 / s4 - crossperp) * m2 / d;
    const double term3 = -(2.0 * gamma / s2 + 4.0 * gamma * gamma) * r2 * m2 / d;
    return term1 + term2 + term3;
  }

  double diag(std::span<const double> xi) const {
    const double s4 = sigma * sigma * sigma * sigma;
    return 2.0 * gamma + dot(xi, xi) / (d * s4);
  }
};

}  // namespace detail

/// Exact infinite-slice squared KSD to N(0, sigma^2 I_d): the closed-form
/// pair summand combines M(1/2; d/2; .) and M(3/2; d/2+1; .) factors with the
/// unit pair direction. ImqApprox replaces the M(1/2;.) factor only;
/// approx_m2 additionally enables the experimental tail surrogate for the
/// M(3/2;.) factor.
inline DiscrepancyEstimate sliced_ksd_analytic(double gamma, double sigma, const SampleBatch& X,
                                               KummerMode mode = KummerMode::Exact,
                                               StatForm form = StatForm::UStatistic,
                                               bool approx_m2 = false) {
  if (!(gamma > 0) || !(sigma > 0))
    throw std::invalid_argument("sliced_ksd_analytic: gamma and sigma must be > 0");
  if (X.d < 2) throw std::invalid_argument("sliced_ksd_analytic: needs d >= 2");
  if (form == StatForm::UStatistic && X.n < 2)
    throw std::invalid_argument("sliced_ksd_analytic: U-statistic needs n >= 2");
  if (mode == KummerMode::ImqApprox && X.d < 4)
    throw std::invalid_argument("sliced_ksd_analytic: ImqApprox requires d >= 4");
  const double n = static_cast<double>(X.n);
  const detail::SlicedKsdTerms terms{gamma, sigma, static_cast<double>(X.d), mode, approx_m2};

  const double pairs = 2.0 * detail::pair_sum(X.n, [&](std::size_t i, std::size_t j) {
    return terms.pair(X.row(i), X.row(j));
  });
  double value;
  if (form == StatForm::UStatistic) {
    value = pairs / (n * (n - 1.0));
  } else {
    double diag = 0.0;
    for (std::size_t i = 0; i < X.n; ++i) diag += terms.diag(X.row(i));
    value = (pairs + diag) / (n * n);
  }
  detail::require_finite(value, "sliced_ksd_analytic");
  return {value, "sliced-ksd-analytic", X.n, X.d, 0, 0, 0, 0.0};
}

/// Closed-form vMF Stein kernel against the uniform sphere target:
///   kappa e^{kappa t} (kappa t^3 + t^2 - kappa t + d - 2),  t = x.y.
inline double vmf_stein_kernel(double kappa, std::size_t d, double t) {
  return kappa * std::exp(kappa * t) *
         (kappa * t * t * t + t * t - kappa * t + static_cast<double>(d) - 2.0);
}

/// U-statistic of the vMF Stein kernel on unit-sphere data; zero in
/// expectation under the uniform distribution.
inline DiscrepancyEstimate vmf_stein_ksd(double kappa, const SampleBatch& X,
                                         StatForm form = StatForm::UStatistic) {
  if (!(kappa > 0)) throw std::invalid_argument("vmf_stein_ksd: kappa must be > 0");
  if (X.n < 2) throw std::invalid_argument("vmf_stein_ksd: need n >= 2");
  if (X.d < 2) throw std::invalid_argument("vmf_stein_ksd: needs d >= 2");
  if (!X.on_unit_sphere()) throw std::invalid_argument("vmf_stein_ksd: rows must be unit norm");
  const double n = static_cast<double>(X.n);
  const double pairs = 2.0 * detail::pair_sum(X.n, [&](std::size_t i, std::size_t j) {
    return vmf_stein_kernel(kappa, X.d, detail::dot(X.row(i), X.row(j)));
  });
  double value;
  if (form == StatForm::UStatistic) {
    value = pairs / (n * (n - 1.0));
  } else {
    value = (pairs + n * vmf_stein_kernel(kappa, X.d, 1.0)) / (n * n);
  }
  detail::require_finite(value, "vmf_stein_ksd");
  return {value, "vmf-ksd", X.n, X.d, 0, 0, 0, 0.0};
}

}  // namespace kerdisc
