#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kerdisc/kernels.hpp"
#include "kerdisc/parallel.hpp"
#include "kerdisc/priors.hpp"
#include "kerdisc/quadrature.hpp"
#include "kerdisc/types.hpp"

namespace kerdisc {

namespace detail {

/// Sum over unordered pairs i<j of f(i,j), deterministic row-blocked.
inline double pair_sum(std::size_t n, const std::function<double(std::size_t, std::size_t)>& f) {
  return parallel_sum(n, [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) acc += f(i, j);
    return acc;
  }, 8);
}

inline double quadrature_omega(double gamma, double knot) {
  // Gaussian spectral weight with bandwidth gamma is N(0, 2 gamma); the rule
  // integrates against N(0,1), so knots rescale by sqrt(2 gamma).
  return std::sqrt(2.0 * gamma) * knot;
}

}  // namespace detail

/// Two-sample MMD^2 estimator for an arbitrary kernel:
/// within-sample pair means (diagonal-free in the U form) minus twice the
/// cross mean. Symmetric in (X, Y); may be slightly negative on finite samples.
inline DiscrepancyEstimate mmd_two_sample_u(const KernelSpec& k, const SampleBatch& X,
                                            const SampleBatch& Y,
                                            StatForm form = StatForm::UStatistic) {
  if (X.d != Y.d) throw std::invalid_argument("mmd_two_sample_u: dimension mismatch");
  if (X.n < 2 || Y.n < 2) throw std::invalid_argument("mmd_two_sample_u: need n >= 2 on both sides");
  const double nx = static_cast<double>(X.n), ny = static_cast<double>(Y.n);

  const double xx = 2.0 * detail::pair_sum(X.n, [&](std::size_t i, std::size_t j) {
    return kernel_eval(k, X.row(i), X.row(j));
  });
  const double yy = 2.0 * detail::pair_sum(Y.n, [&](std::size_t i, std::size_t j) {
    return kernel_eval(k, Y.row(i), Y.row(j));
  });
  const double xy = parallel_sum(X.n, [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < Y.n; ++j) acc += kernel_eval(k, X.row(i), Y.row(j));
    return acc;
  }, 8);

  double value;
  if (form == StatForm::UStatistic) {
    value = xx / (nx * (nx - 1.0)) + yy / (ny * (ny - 1.0)) - 2.0 * xy / (nx * ny);
  } else {
    double dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < X.n; ++i) dx += kernel_eval(k, X.row(i), X.row(i));
    for (std::size_t i = 0; i < Y.n; ++i) dy += kernel_eval(k, Y.row(i), Y.row(i));
    value = (xx + dx) / (nx * nx) + (yy + dy) / (ny * ny) - 2.0 * xy / (nx * ny);
  }
  detail::require_finite(value, "mmd_two_sample_u");
  return {value, "mmd-u", X.n, X.d, 0, 0, 0, 0.0};
}

/// Characteristic-function MMD^2 estimator in one dimension: quadrature of
/// |empirical CF - target CF|^2 against the Gaussian spectral density with
/// bandwidth gamma (knots rescaled by sqrt(2 gamma)). Both cosine and sine
/// parts enter the squared modulus; cosine_only reproduces the reference
/// pseudo-code arithmetic instead.
inline DiscrepancyEstimate mmd_cf_quadrature_1d(double gamma, const SampleBatch& X1,
                                                const PriorSpec& p, const QuadratureRule& rule,
                                                bool cosine_only = false) {
  if (X1.d != 1) throw std::invalid_argument("mmd_cf_quadrature_1d: batch must be one-dimensional");
  if (!(gamma > 0)) throw std::invalid_argument("mmd_cf_quadrature_1d: gamma must be > 0");
  if (rule.size() == 0) throw std::invalid_argument("mmd_cf_quadrature_1d: empty rule");
  const double n = static_cast<double>(X1.n);
  double value = 0.0;
  for (std::size_t u = 0; u < rule.size(); ++u) {
    const double omega = detail::quadrature_omega(gamma, rule.knots[u]);
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < X1.n; ++i) {
      const double a = omega * X1.data[i];
      re += std::cos(a);
      im += std::sin(a);
    }
    re /= n;
    im /= n;
    const double target = cf_slice(p, omega);
    double err = (re - target) * (re - target);
    if (!cosine_only) err += im * im;
    value += rule.weights[u] * err;
  }
  detail::require_finite(value, "mmd_cf_quadrature_1d");
  return {value, "mmd-cf", X1.n, 1, 0, rule.size(), 0, 0.0};
}

/// Gaussian-kernel, Gaussian-prior MMD^2 with the prior integrated in closed
/// form (the BHEP statistic): pair term, cross term with the
/// (1+2 gamma sigma^2)^{-d/2} attenuation, and constant (1+4 gamma sigma^2)^{-d/2}.
inline DiscrepancyEstimate mmd_gaussian_closed_form(double gamma, double sigma,
                                                    const SampleBatch& X,
                                                    StatForm form = StatForm::UStatistic) {
  if (!(gamma > 0) || !(sigma > 0))
    throw std::invalid_argument("mmd_gaussian_closed_form: gamma and sigma must be > 0");
  if (form == StatForm::UStatistic && X.n < 2)
    throw std::invalid_argument("mmd_gaussian_closed_form: U-statistic needs n >= 2");
  const double n = static_cast<double>(X.n);
  const double d = static_cast<double>(X.d);
  const double c1 = 1.0 + 2.0 * gamma * sigma * sigma;
  const double c2 = 1.0 + 4.0 * gamma * sigma * sigma;

  const double pairs = 2.0 * detail::pair_sum(X.n, [&](std::size_t i, std::size_t j) {
    return std::exp(-gamma * detail::sq_distance(X.row(i), X.row(j)));
  });
  const double cross = parallel_sum(X.n, [&](std::size_t i) {
    return std::exp(-gamma / c1 * detail::dot(X.row(i), X.row(i)));
  });

  const double pair_term = form == StatForm::UStatistic ? pairs / (n * (n - 1.0))
                                                        : (pairs + n) / (n * n);
  const double value =
      pair_term - 2.0 / (n * std::pow(c1, 0.5 * d)) * cross + std::pow(c2, -0.5 * d);
  detail::require_finite(value, "mmd_gaussian_closed_form");
  return {value, "bhep", X.n, X.d, 0, 0, 0, 0.0};
}

/// Exact infinite-slice MMD^2 to N(0, sigma^2 I_d): the Kummer-kernel pair
/// term, the attenuated per-sample Kummer cross term, and the constant
/// (1+4 gamma sigma^2)^{-1/2} (the sliced Gaussian-Gaussian term, dimension-free).
inline DiscrepancyEstimate mmd_kummer_analytic_sliced(double gamma, double sigma,
                                                      const SampleBatch& X,
                                                      KummerMode mode = KummerMode::Exact,
                                                      StatForm form = StatForm::UStatistic) {
  if (!(gamma > 0) || !(sigma > 0))
    throw std::invalid_argument("mmd_kummer_analytic_sliced: gamma and sigma must be > 0");
  if (X.d < 2) throw std::invalid_argument("mmd_kummer_analytic_sliced: needs d >= 2");
  if (form == StatForm::UStatistic && X.n < 2)
    throw std::invalid_argument("mmd_kummer_analytic_sliced: U-statistic needs n >= 2");
  if (mode == KummerMode::ImqApprox && X.d < 4)
    throw std::invalid_argument("mmd_kummer_analytic_sliced: ImqApprox requires d >= 4");
  const double n = static_cast<double>(X.n);
  const double c1 = 1.0 + 2.0 * gamma * sigma * sigma;
  const double c2 = 1.0 + 4.0 * gamma * sigma * sigma;

  const double pairs = 2.0 * detail::pair_sum(X.n, [&](std::size_t i, std::size_t j) {
    return kummer_half_d(gamma * detail::sq_distance(X.row(i), X.row(j)), X.d, mode);
  });
  const double cross = parallel_sum(X.n, [&](std::size_t i) {
    return kummer_half_d(gamma / c1 * detail::dot(X.row(i), X.row(i)), X.d, mode);
  });

  const double pair_term = form == StatForm::UStatistic ? pairs / (n * (n - 1.0))
                                                        : (pairs + n) / (n * n);
  const double value = pair_term - 2.0 / (n * std::sqrt(c1)) * cross + 1.0 / std::sqrt(c2);
  detail::require_finite(value, "mmd_kummer_analytic_sliced");
  return {value, "kummer-mmd", X.n, X.d, 0, 0, 0, 0.0};
}

/// vMF-kernel MMD^2 to the uniform sphere distribution, up to its additive
/// constant: the diagonal-free mean of exp(kappa x_i . x_j). The
/// P-independent cross/constant terms are omitted (they cancel in
/// comparisons and gradients). Accumulated with the max exponent factored
/// out so large kappa cannot overflow intermediates.
inline DiscrepancyEstimate mmd_vmf_sphere_energy(double kappa, const SampleBatch& X,
                                                 StatForm form = StatForm::UStatistic) {
  if (!(kappa > 0)) throw std::invalid_argument("mmd_vmf_sphere_energy: kappa must be > 0");
  if (X.n < 2) throw std::invalid_argument("mmd_vmf_sphere_energy: need n >= 2");
  if (!X.on_unit_sphere()) throw std::invalid_argument("mmd_vmf_sphere_energy: rows must be unit norm");
  const double n = static_cast<double>(X.n);

  const double sum_scaled = 2.0 * detail::pair_sum(X.n, [&](std::size_t i, std::size_t j) {
    return std::exp(kappa * (detail::dot(X.row(i), X.row(j)) - 1.0));
  });
  // t <= 1 on the sphere, so kappa is the max exponent
  double value;
  if (form == StatForm::UStatistic) {
    value = std::exp(kappa + std::log(sum_scaled / (n * (n - 1.0))));
  } else {
    value = std::exp(kappa + std::log((sum_scaled + n) / (n * n)));
  }
  detail::require_finite(value, "mmd_vmf_sphere_energy");
  return {value, "vmf-mmd", X.n, X.d, 0, 0, 0, 0.0};
}

}  // namespace kerdisc
