#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "kerdisc/flow.hpp"
#include "kerdisc/geometry.hpp"
#include "kerdisc/kummer.hpp"
#include "kerdisc/mmd.hpp"
#include "kerdisc/priors.hpp"
#include "kerdisc/quadrature.hpp"
#include "kerdisc/sliced.hpp"
#include "kerdisc/sphere_integrals.hpp"
#include "kerdisc/stein.hpp"

namespace kerdisc {

/// One self-test check: the measured statistic must stay within bound.
struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double bound = 0.0;
  std::string detail;
  double ms = 0.0;
};

struct SelftestOptions {
  std::string filter;          // substring; empty runs everything
  bool fast = false;           // reduced Monte-Carlo budgets
  std::string inject_failure;  // test hook: corrupt the named check's result
};

namespace selftest_detail {

using Clock = std::chrono::steady_clock;

inline CheckResult make(const std::string& name, double measured, double bound,
                        const std::string& detail = "") {
  CheckResult r;
  r.name = name;
  r.measured = measured;
  r.bound = bound;
  r.pass = measured <= bound;
  r.detail = detail;
  return r;
}

/// Independent long-double series oracle: e^z * sum of 200 terms of
/// M(b-a; b; -z), no rescaling, no log-domain arithmetic.
inline double kummer_series_oracle(double a, double b, double z) {
  const long double x = -static_cast<long double>(z);
  const long double A = static_cast<long double>(b) - static_cast<long double>(a);
  long double term = 1.0L, sum = 1.0L;
  for (int k = 0; k < 200; ++k) {
    term *= (A + k) * x / ((static_cast<long double>(b) + k) * (k + 1.0L));
    sum += term;
  }
  return static_cast<double>(std::exp(static_cast<long double>(z)) * sum);
}

inline double double_factorial(int k) {
  double v = 1.0;
  for (int i = k; i > 1; i -= 2) v *= i;
  return v;
}

inline double abs_z(double diff, double se) { return se > 0 ? std::abs(diff) / se : std::abs(diff) / 1e-300; }

// --- individual checks ------------------------------------------------------

inline CheckResult check_quadrature_exactness(const SelftestOptions&) {
  double worst = 0.0;
  for (std::size_t u : {std::size_t{2}, std::size_t{5}, std::size_t{21}}) {
    const QuadratureRule rule = gauss_hermite(u);
    for (std::size_t k = 0; k + 1 <= 2 * u - 1; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < u; ++i) acc += rule.weights[i] * std::pow(rule.knots[i], static_cast<double>(k));
      const double exact = (k % 2 == 1) ? 0.0 : double_factorial(static_cast<int>(k) - 1);
      worst = std::max(worst, std::abs(acc - exact));
    }
  }
  return make("quadrature-exactness", worst, 1e-10, "max |moment error|, u in {2,5,21}");
}

inline CheckResult check_kummer_series(const SelftestOptions&) {
  double worst = 0.0;
  const double erf1 = std::erf(1.0);
  worst = std::max(worst, std::abs(kummer_m(0.5, 1.5, -1.0) - std::sqrt(M_PI) * erf1 / 2.0) /
                              (std::sqrt(M_PI) * erf1 / 2.0));
  worst = std::max(worst, std::abs(kummer_m(0.5, 0.5, -1.0) - std::exp(-1.0)) / std::exp(-1.0));
  const struct {
    double a, b, z;
  } pts[] = {{0.5, 1.0, -1.0}, {0.5, 4.0, -12.5}, {1.5, 5.0, -7.5}, {0.5, 16.0, -40.0},
             {1.5, 9.0, -33.0}, {0.5, 2.5, -0.01}};
  for (const auto& p : pts) {
    const double ref = kummer_series_oracle(p.a, p.b, p.z);
    worst = std::max(worst, std::abs(kummer_m(p.a, p.b, p.z) - ref) / std::abs(ref));
  }
  return make("kummer-series-oracle", worst, 1e-10, "max rel err vs independent series");
}

inline CheckResult check_kummer_recurrence(const SelftestOptions& opts) {
  RandomStream rs(RngState{20250811, 1});
  const int reps = opts.fast ? 100 : 200;
  double worst = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double a = 0.3 + 2.2 * rs.uniform01();
    const double b = a + 0.3 + 6.0 * rs.uniform01();
    const double z = -30.0 * rs.uniform01();
    const double m0 = kummer_m(a - 1.0, b, z);
    const double m1 = kummer_m(a, b, z);
    const double m2 = kummer_m(a + 1.0, b, z);
    const double lhs = (b - a) * m0 + (2.0 * a - b + z) * m1 - a * m2;
    const double scale = std::abs((b - a) * m0) + std::abs((2.0 * a - b + z) * m1) + std::abs(a * m2);
    worst = std::max(worst, std::abs(lhs) / std::max(scale, 1e-300));
  }
  return make("kummer-recurrence", worst, 1e-8, "max rel residual of the contiguous relation");
}

inline CheckResult check_imq_limit(const SelftestOptions&) {
  const std::size_t dims[] = {4, 20, 128};
  double max_err[3] = {0, 0, 0};
  for (int di = 0; di < 3; ++di) {
    for (int ci = 0; ci <= 500; ++ci) {
      const double c = 0.1 * ci;
      const double ex = kummer_half_d(c, dims[di], KummerMode::Exact);
      const double ap = kummer_half_d(c, dims[di], KummerMode::ImqApprox);
      max_err[di] = std::max(max_err[di], std::abs(ex - ap));
    }
  }
  double small_c = 0.0;
  for (int ci = 0; ci <= 50; ++ci) {
    const double c = 0.1 * ci;
    small_c = std::max(small_c, std::abs(kummer_half_d(c, 128, KummerMode::Exact) -
                                         kummer_half_d(c, 128, KummerMode::ImqApprox)));
  }
  const bool monotone = max_err[0] > max_err[1] && max_err[1] > max_err[2];
  CheckResult r = make("kummer-imq-limit", small_c, 1e-3,
                       "d=128 max |exact-imq| for c<=5; decreasing across d in {4,20,128}");
  r.pass = r.pass && monotone;
  if (!monotone) r.detail += " [monotone decrease FAILED]";
  return r;
}

inline CheckResult check_j_lemmas_mc(const SelftestOptions& opts) {
  const std::size_t draws = opts.fast ? 200000 : 1000000;
  double worst = 0.0;
  for (std::size_t d : {std::size_t{2}, std::size_t{3}, std::size_t{8}}) {
    const DirectionSet th = sample_directions(draws, d, RngState{777, d});
    for (double c : {0.3, 2.0}) {
      double m1 = 0.0, m2 = 0.0, s1 = 0.0, s2 = 0.0;
      for (std::size_t i = 0; i < draws; ++i) {
        const double t1 = th.dirs[i * d];
        const double e = std::exp(-c * t1 * t1);
        m1 += e;
        m2 += t1 * t1 * e;
        s1 += e * e;
        s2 += t1 * t1 * e * t1 * t1 * e;
      }
      const double n = static_cast<double>(draws);
      m1 /= n;
      m2 /= n;
      const double se1 = std::sqrt((s1 / n - m1 * m1) / n) * sphere_area(d);
      const double se2 = std::sqrt((s2 / n - m2 * m2) / n) * sphere_area(d);
      worst = std::max(worst, abs_z(j1(c, d) - sphere_area(d) * m1, se1));
      worst = std::max(worst, abs_z(j2(c, d) - sphere_area(d) * m2, se2));
    }
  }
  return make("j-lemmas-mc", worst, 3.0, "max |z| of J1,J2 vs Monte-Carlo sphere integrals");
}

inline CheckResult check_j_orthogonal_mc(const SelftestOptions& opts) {
  const std::size_t draws = opts.fast ? 200000 : 1000000;
  double worst = 0.0;
  RandomStream rs(RngState{4242, 0});
  for (std::size_t d : {std::size_t{2}, std::size_t{3}, std::size_t{8}}) {
    // random u, v orthogonal to e_1 (first coordinate zero)
    std::vector<double> uv(2 * d, 0.0);
    for (std::size_t k = 1; k < d; ++k) {
      uv[k] = rs.normal();
      uv[d + k] = rs.normal();
    }
    double udotv = 0.0;
    for (std::size_t k = 0; k < d; ++k) udotv += uv[k] * uv[d + k];
    const DirectionSet th = sample_directions(draws, d, RngState{777, 100 + d});
    for (double c : {0.3, 2.0}) {
      double mean = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < draws; ++i) {
        double tu = 0.0, tv = 0.0;
        const double t1 = th.dirs[i * d];
        for (std::size_t k = 0; k < d; ++k) {
          tu += th.dirs[i * d + k] * uv[k];
          tv += th.dirs[i * d + k] * uv[d + k];
        }
        const double val = tu * tv * std::exp(-c * t1 * t1);
        mean += val;
        sq += val * val;
      }
      const double n = static_cast<double>(draws);
      mean /= n;
      const double se = std::sqrt((sq / n - mean * mean) / n) * sphere_area(d);
      const double analytic = udotv * (j1(c, d) - j2(c, d)) / (static_cast<double>(d) - 1.0);
      worst = std::max(worst, abs_z(analytic - sphere_area(d) * mean, se));
    }
  }
  return make("j-orthogonal-mc", worst, 3.0, "max |z| of the orthogonal sphere-integral identity");
}

inline CheckResult check_bochner_gaussian_1d(const SelftestOptions&) {
  const double gamma = 0.5;
  const KernelSpec k = KernelSpec::gaussian(gamma);
  // trapezoid over [-40, 40], independent of the quadrature module
  const int nsteps = 200000;
  const double lo = -40.0, hi = 40.0, h = (hi - lo) / nsteps;
  double mass = 0.0, boch = 0.0;
  for (int i = 0; i <= nsteps; ++i) {
    const double w = lo + h * i;
    const double coeff = (i == 0 || i == nsteps) ? 0.5 : 1.0;
    const double rho = spectral_density(k, std::span<const double>(&w, 1));
    mass += coeff * rho * h;
    boch += coeff * std::cos(0.5 * w) * rho * h;
  }
  const double err = std::max(std::abs(mass - 1.0), std::abs(boch - std::exp(-gamma * 0.25)));
  return make("bochner-gaussian-1d", err, 1e-6, "unit mass and k(0.5) identity at d=1");
}

inline CheckResult check_bochner_imq_1d(const SelftestOptions&) {
  double worst = 0.0;
  for (const auto& par : {std::pair<double, double>{0.8, 1.7}, std::pair<double, double>{1.0, 2.0}}) {
    const KernelSpec k = KernelSpec::imq(par.first, par.second);
    const int nsteps = 400000;
    const double lo = 1e-9, hi = 80.0 * std::sqrt(par.first);
    const double h = (hi - lo) / nsteps;
    double mass = 0.0, boch = 0.0;
    const double r = 0.5;
    for (int i = 0; i <= nsteps; ++i) {
      const double w = lo + h * i;
      const double coeff = (i == 0 || i == nsteps) ? 0.5 : 1.0;
      const double rho = spectral_density(k, std::span<const double>(&w, 1));
      mass += 2.0 * coeff * rho * h;  // symmetric density
      boch += 2.0 * coeff * std::cos(r * w) * rho * h;
    }
    worst = std::max(worst, std::abs(mass - 1.0));
    worst = std::max(worst, std::abs(boch - std::pow(1.0 + par.first * r * r, -par.second)));
  }
  return make("bochner-imq-1d", worst, 1e-4, "IMQ spectral density mass and k(0.5) identity at d=1");
}

inline CheckResult check_mmd_slicing_equivalence(const SelftestOptions& opts) {
  const std::size_t m = opts.fast ? 10000 : 100000;
  const double gamma = 0.2, sigma = 1.0;
  double worst = 0.0;
  std::string det;
  for (std::size_t d : {std::size_t{2}, std::size_t{8}, std::size_t{32}}) {
    const SampleBatch X = sample(PriorSpec::gaussian(1.0, d), 128, RngState{5150, d});
    const double analytic = mmd_kummer_analytic_sliced(gamma, sigma, X).value;
    const OracleResult o = mc_slice_oracle(SliceMetric1d::GaussianMmdClosedForm1D, X, gamma, sigma,
                                           m, RngState{99, d});
    worst = std::max(worst, abs_z(analytic - o.mean, o.se));
  }
  return make("mmd-slicing-equivalence", worst, 3.0,
              "max |z| of analytic-sliced MMD vs direction Monte Carlo, d in {2,8,32}");
}

inline CheckResult check_ksd_slicing_equivalence(const SelftestOptions& opts) {
  const std::size_t m = opts.fast ? 10000 : 100000;
  const double gamma = 0.2, sigma = 1.0;
  double worst = 0.0;
  for (std::size_t d : {std::size_t{2}, std::size_t{8}, std::size_t{32}}) {
    const SampleBatch X = sample(PriorSpec::gaussian(1.0, d), 128, RngState{5151, d});
    const double analytic = sliced_ksd_analytic(gamma, sigma, X).value;
    const OracleResult o = mc_slice_oracle(SliceMetric1d::GaussianSteinKernel1D, X, gamma, sigma,
                                           m, RngState{98, d});
    worst = std::max(worst, abs_z(analytic - o.mean, o.se));
  }
  return make("ksd-slicing-equivalence", worst, 3.0,
              "max |z| of analytic-sliced KSD vs direction Monte Carlo, d in {2,8,32}");
}

inline CheckResult check_stein_identity_nulls(const SelftestOptions& opts) {
  const std::size_t batches = opts.fast ? 100 : 500;
  const std::size_t n = 128;
  double worst = 0.0;
  std::uint64_t cfg = 0;
  for (int kk = 0; kk < 2; ++kk) {
    const KernelSpec base = kk == 0 ? KernelSpec::gaussian(0.5) : KernelSpec::imq(1.0, 0.5);
    for (int pp = 0; pp < 3; ++pp) {
      for (std::size_t d : {std::size_t{1}, std::size_t{4}}) {
        PriorSpec prior = pp == 0   ? PriorSpec::gaussian(1.0, d)
                          : pp == 1 ? PriorSpec::laplace(1.0, d)
                                    : PriorSpec::student_t(5.0, 1.0, d);
        const SteinKernelSpec spec{base, prior};
        double mean = 0.0, sq = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
          const double v = ksd_u_statistic(spec, sample(prior, n, RngState{1000 + cfg, b})).value;
          mean += v;
          sq += v * v;
        }
        const double B = static_cast<double>(batches);
        mean /= B;
        const double se = std::sqrt((sq / B - mean * mean) / B);
        worst = std::max(worst, abs_z(mean, se));
        ++cfg;
      }
    }
  }
  return make("stein-identity-nulls", worst, 3.0,
              "max |z| of the null KSD mean over (Gaussian,IMQ) x (Gaussian,Laplace,StudentT) x d in {1,4}");
}

inline CheckResult check_bhep_null(const SelftestOptions& opts) {
  const std::size_t batches = opts.fast ? 400 : 2000;
  const std::size_t n = 64;
  const PriorSpec prior = PriorSpec::gaussian(1.0, 2);
  double mean = 0.0, sq = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    const double v = mmd_gaussian_closed_form(0.5, 1.0, sample(prior, n, RngState{31337, b})).value;
    mean += v;
    sq += v * v;
  }
  const double B = static_cast<double>(batches);
  mean /= B;
  const double se = std::sqrt((sq / B - mean * mean) / B);
  return make("bhep-null-unbiased", abs_z(mean, se), 3.0, "null |z| of the U-form BHEP mean");
}

inline CheckResult check_bhep_bias_decay(const SelftestOptions& opts) {
  const std::size_t batches = opts.fast ? 400 : 1500;
  const PriorSpec prior = PriorSpec::gaussian(1.0, 2);
  double bias[2] = {0.0, 0.0};
  const std::size_t ns[2] = {32, 512};
  for (int i = 0; i < 2; ++i) {
    for (std::size_t b = 0; b < batches; ++b)
      bias[i] += mmd_gaussian_closed_form(0.5, 1.0, sample(prior, ns[i], RngState{77 + i, b}),
                                          StatForm::VStatistic)
                     .value;
    bias[i] /= static_cast<double>(batches);
  }
  const double ratio = bias[0] / bias[1];
  CheckResult r = make("bhep-vform-bias-decay", ratio, 24.0, "V-form null bias ratio n=32 vs n=512");
  r.pass = ratio >= 8.0 && ratio <= 24.0;
  return r;
}

inline CheckResult check_ep_is_mmd(const SelftestOptions&) {
  const QuadratureRule rule = gauss_hermite(64);
  const double gamma = 0.5, sigma = 1.0;
  const std::size_t n = 256;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    // alternate null and shifted data
    SampleBatch X = sample(PriorSpec::gaussian(1.0, 1), n, RngState{123, seed});
    if (seed % 2 == 1)
      for (double& v : X.data) v = 0.4 + 1.2 * v;
    const double cf = mmd_cf_quadrature_1d(gamma, X, PriorSpec::gaussian(sigma, 1), rule).value;
    const double u = mmd_gaussian_closed_form(gamma, sigma, X).value;
    double pair_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        pair_mean += 2.0 * std::exp(-gamma * detail::sq_distance(X.row(i), X.row(j)));
    pair_mean /= static_cast<double>(n) * (static_cast<double>(n) - 1.0);
    const double v_from_u = u + (1.0 - pair_mean) / static_cast<double>(n);
    worst = std::max(worst, std::abs(cf - v_from_u));
  }
  return make("ep-is-mmd-quadrature", worst, 2e-3,
              "max |CF quadrature - closed form| after the U/V correction, 20 seeds");
}

inline CheckResult check_kummer_mmd_constant(const SelftestOptions& opts) {
  const std::size_t pairs = opts.fast ? 20000 : 100000;
  const double gamma = 0.2, sigma = 1.0;
  const std::size_t d = 8;
  RandomStream rs(RngState{2718, 0});
  double mean = 0.0, sq = 0.0;
  std::vector<double> y(d), y2(d);
  for (std::size_t i = 0; i < pairs; ++i) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      y[k] = sigma * rs.normal();
      y2[k] = sigma * rs.normal();
      r2 += (y[k] - y2[k]) * (y[k] - y2[k]);
    }
    const double v = kummer_m(0.5, 0.5 * static_cast<double>(d), -gamma * r2);
    mean += v;
    sq += v * v;
  }
  const double B = static_cast<double>(pairs);
  mean /= B;
  const double se = std::sqrt((sq / B - mean * mean) / B);
  const double analytic = 1.0 / std::sqrt(1.0 + 4.0 * gamma * sigma * sigma);
  return make("kummer-mmd-constant", abs_z(analytic - mean, se), 3.0,
              "|z| of C = (1+4 gamma sigma^2)^{-1/2} vs Monte-Carlo prior integration");
}

inline CheckResult check_vmf_stein_null(const SelftestOptions& opts) {
  const std::size_t batches = opts.fast ? 60 : 150;
  const std::size_t n = 400;
  double mean = 0.0, sq = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    const double v =
        vmf_stein_ksd(1.0, sample(PriorSpec::uniform_sphere(3), n, RngState{1234, b})).value;
    mean += v;
    sq += v * v;
  }
  const double B = static_cast<double>(batches);
  mean /= B;
  const double se = std::sqrt((sq / B - mean * mean) / B);
  return make("vmf-stein-null", abs_z(mean, se), 3.0, "null |z| of the vMF Stein U-statistic mean");
}

inline CheckResult check_vmf_cross_invariance(const SelftestOptions& opts) {
  const std::size_t draws = opts.fast ? 50000 : 200000;
  const std::size_t d = 3;
  const double kappa = 1.0;
  const DirectionSet xs = sample_directions(5, d, RngState{717, 0});
  double means[5], ses[5];
  for (std::size_t i = 0; i < 5; ++i) {
    const SampleBatch ys = sample(PriorSpec::uniform_sphere(d), draws, RngState{717, 1 + i});
    double mean = 0.0, sq = 0.0;
    for (std::size_t j = 0; j < draws; ++j) {
      const double v = std::exp(kappa * detail::dot(xs.row(i), ys.row(j)));
      mean += v;
      sq += v * v;
    }
    const double B = static_cast<double>(draws);
    mean /= B;
    means[i] = mean;
    ses[i] = std::sqrt((sq / B - mean * mean) / B);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j)
      worst = std::max(worst, std::abs(means[i] - means[j]) /
                                  std::sqrt(ses[i] * ses[i] + ses[j] * ses[j]));
  return make("vmf-cross-invariance", worst, 3.0,
              "max pairwise |z| of E_y exp(kappa x.y) across 5 random x");
}

inline CheckResult check_vmf_spot_values(const SelftestOptions&) {
  double worst = 0.0;
  for (double kappa : {1.0, 2.5}) {
    for (std::size_t d : {std::size_t{2}, std::size_t{3}, std::size_t{8}}) {
      const double at1 = kappa * std::exp(kappa) * (static_cast<double>(d) - 1.0);
      const double at0 = kappa * (static_cast<double>(d) - 2.0);
      worst = std::max(worst, std::abs(vmf_stein_kernel(kappa, d, 1.0) - at1) / std::max(1.0, at1));
      worst = std::max(worst, std::abs(vmf_stein_kernel(kappa, d, 0.0) - at0) / std::max(1.0, std::abs(at0)));
    }
  }
  return make("vmf-spot-values", worst, 1e-12, "closed-form Stein kernel at t=1 and t=0");
}

inline CheckResult check_spectral_kernel_ksd_1d(const SelftestOptions&) {
  const QuadratureRule rule = gauss_hermite(64);
  const double gamma = 0.5, sigma = 1.0;
  double worst = 0.0;
  for (std::size_t n : {std::size_t{64}, std::size_t{512}}) {
    const SampleBatch X = sample(PriorSpec::gaussian(1.0, 1), n, RngState{404, n});
    const double spec = ksd_spectral_1d(PriorSpec::gaussian(sigma, 1), X, gamma, rule).value;
    double vform = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        vform += gaussian_stein_kernel_1d(gamma, sigma, X.data[i], X.data[j]);
    vform /= static_cast<double>(n) * static_cast<double>(n);
    worst = std::max(worst, std::abs(spec - vform));
  }
  return make("spectral-kernel-ksd-1d", worst, 1e-6,
              "max |spectral V-form - kernel V-form| at d=1, u=64");
}

}  // namespace selftest_detail

inline std::vector<std::pair<std::string, std::function<CheckResult(const SelftestOptions&)>>>
selftest_checks() {
  using namespace selftest_detail;
  return {
      {"quadrature-exactness", check_quadrature_exactness},
      {"kummer-series-oracle", check_kummer_series},
      {"kummer-recurrence", check_kummer_recurrence},
      {"kummer-imq-limit", check_imq_limit},
      {"j-lemmas-mc", check_j_lemmas_mc},
      {"j-orthogonal-mc", check_j_orthogonal_mc},
      {"bochner-gaussian-1d", check_bochner_gaussian_1d},
      {"bochner-imq-1d", check_bochner_imq_1d},
      {"mmd-slicing-equivalence", check_mmd_slicing_equivalence},
      {"ksd-slicing-equivalence", check_ksd_slicing_equivalence},
      {"stein-identity-nulls", check_stein_identity_nulls},
      {"bhep-null-unbiased", check_bhep_null},
      {"bhep-vform-bias-decay", check_bhep_bias_decay},
      {"ep-is-mmd-quadrature", check_ep_is_mmd},
      {"kummer-mmd-constant", check_kummer_mmd_constant},
      {"vmf-stein-null", check_vmf_stein_null},
      {"vmf-cross-invariance", check_vmf_cross_invariance},
      {"vmf-spot-values", check_vmf_spot_values},
      {"spectral-kernel-ksd-1d", check_spectral_kernel_ksd_1d},
  };
}

/// Runs every check whose name contains opts.filter; reports one line per
/// check on `progress` when given. The inject_failure hook corrupts the named
/// check's measured value, exercising the failure path end to end.
inline std::vector<CheckResult> run_selftest(const SelftestOptions& opts,
                                             std::ostream* progress = nullptr) {
  std::vector<CheckResult> results;
  for (auto& [name, fn] : selftest_checks()) {
    if (!opts.filter.empty() && name.find(opts.filter) == std::string::npos) continue;
    const auto t0 = selftest_detail::Clock::now();
    CheckResult r = fn(opts);
    if (!opts.inject_failure.empty() && name == opts.inject_failure) {
      r.measured = 10.0 * r.bound + 1.0;
      r.pass = false;
      r.detail += " [constant deliberately corrupted by test hook]";
    }
    r.ms = std::chrono::duration<double, std::milli>(selftest_detail::Clock::now() - t0).count();
    if (progress) {
      (*progress) << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  measured=" << r.measured
                  << " bound=" << r.bound << "  (" << r.detail << ")  [" << r.ms << " ms]\n";
      progress->flush();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace kerdisc
