#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerdisc/io.hpp"
#include "kerdisc/mmd.hpp"
#include "kerdisc/sliced.hpp"
#include "kerdisc/stein.hpp"

namespace kerdisc {

inline PriorSpec with_dim(PriorSpec p, std::size_t d) {
  p.d = d;
  return p;
}

/// Any estimator usable as the regularizer Omega in the self-supervised
/// objective. Flow use requires the diagonal-inclusive V form (nonnegative in
/// expectation, smooth at coincident points).
struct RegularizerSpec {
  enum class Family { Bhep, KummerMmd, SlicedMmd, Ksd, SlicedKsd, SlicedKsdAnalytic, VmfMmd, VmfKsd };
  Family family = Family::Bhep;
  double gamma = 0.5;
  double sigma = 1.0;
  double kappa = 1.0;
  KernelSpec base = KernelSpec::gaussian(0.5);     // Ksd only
  PriorSpec prior = PriorSpec::gaussian(1.0, 1);   // sliced and Ksd families
  std::size_t slices = 1024;
  std::size_t knots = 21;
  KummerMode kmode = KummerMode::Exact;
  ScoreMode score_mode = ScoreMode::PseudoCodeFaithful;
  StatForm form = StatForm::VStatistic;

  const char* name() const {
    switch (family) {
      case Family::Bhep: return "bhep";
      case Family::KummerMmd: return "kummer-mmd";
      case Family::SlicedMmd: return "sliced-mmd";
      case Family::Ksd: return "ksd";
      case Family::SlicedKsd: return "sliced-ksd";
      case Family::SlicedKsdAnalytic: return "sliced-ksd-analytic";
      case Family::VmfMmd: return "vmf-mmd";
      case Family::VmfKsd: return "vmf-ksd";
    }
    return "?";
  }
};

inline DiscrepancyEstimate evaluate_regularizer(const RegularizerSpec& r, const SampleBatch& Z,
                                                RngState rng) {
  switch (r.family) {
    case RegularizerSpec::Family::Bhep:
      return mmd_gaussian_closed_form(r.gamma, r.sigma, Z, r.form);
    case RegularizerSpec::Family::KummerMmd:
      return mmd_kummer_analytic_sliced(r.gamma, r.sigma, Z, r.kmode, r.form);
    case RegularizerSpec::Family::SlicedMmd: {
      SlicedRegSpec s{SlicedFamily::MmdReg, r.prior, r.slices, gauss_hermite(r.knots),
                      r.gamma, r.score_mode, false};
      return sliced_mmd_reg(s, Z, rng);
    }
    case RegularizerSpec::Family::Ksd:
      return ksd_u_statistic({r.base, with_dim(r.prior, Z.d)}, Z, r.form);
    case RegularizerSpec::Family::SlicedKsd: {
      SlicedRegSpec s{SlicedFamily::KsdReg, r.prior, r.slices, gauss_hermite(r.knots),
                      r.gamma, r.score_mode, false};
      return sliced_ksd_reg(s, Z, rng);
    }
    case RegularizerSpec::Family::SlicedKsdAnalytic:
      return sliced_ksd_analytic(r.gamma, r.sigma, Z, r.kmode, r.form);
    case RegularizerSpec::Family::VmfMmd:
      return mmd_vmf_sphere_energy(r.kappa, Z, r.form);
    case RegularizerSpec::Family::VmfKsd:
      return vmf_stein_ksd(r.kappa, Z, r.form);
  }
  throw std::logic_error("evaluate_regularizer: unreachable");
}

enum class GradMode { FiniteDifference, Analytic };

inline bool has_analytic_gradient(const RegularizerSpec& r) {
  switch (r.family) {
    case RegularizerSpec::Family::Bhep:
    case RegularizerSpec::Family::KummerMmd:
    case RegularizerSpec::Family::SlicedMmd:
    case RegularizerSpec::Family::VmfMmd:
    case RegularizerSpec::Family::VmfKsd:
      return true;
    case RegularizerSpec::Family::Ksd:
      return r.base.kind == KernelSpec::Kind::Gaussian && r.prior.kind == PriorSpec::Kind::Gaussian;
    case RegularizerSpec::Family::SlicedKsd:
      return r.prior.kind == PriorSpec::Kind::Gaussian ||
             (r.prior.kind == PriorSpec::Kind::Laplace && r.score_mode == ScoreMode::PseudoCodeFaithful);
    case RegularizerSpec::Family::SlicedKsdAnalytic:
      return false;
  }
  return false;
}

namespace detail {

inline double pair_coeff(StatForm form, double n) {
  return form == StatForm::UStatistic ? 1.0 / (n * (n - 1.0)) : 1.0 / (n * n);
}

inline std::vector<double> bhep_gradient(const RegularizerSpec& r, const SampleBatch& Z) {
  const double n = static_cast<double>(Z.n);
  const double c1 = 1.0 + 2.0 * r.gamma * r.sigma * r.sigma;
  const double cp = pair_coeff(r.form, n);
  std::vector<double> g(Z.n * Z.d, 0.0);
  parallel_blocks(Z.n, 8, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      for (std::size_t j = 0; j < Z.n; ++j) {
        if (j == i) continue;
        const double e = std::exp(-r.gamma * sq_distance(Z.row(i), Z.row(j)));
        const double f = -4.0 * r.gamma * cp * e;
        for (std::size_t k = 0; k < Z.d; ++k) g[i * Z.d + k] += f * (Z(i, k) - Z(j, k));
      }
      const double e = std::exp(-r.gamma / c1 * dot(Z.row(i), Z.row(i)));
      const double f = 4.0 * r.gamma / (n * std::pow(c1, 0.5 * Z.d + 1.0)) * e;
      for (std::size_t k = 0; k < Z.d; ++k) g[i * Z.d + k] += f * Z(i, k);
    }
  });
  return g;
}

inline std::vector<double> kummer_mmd_gradient(const RegularizerSpec& r, const SampleBatch& Z) {
  const double n = static_cast<double>(Z.n);
  const double d = static_cast<double>(Z.d);
  const double c1 = 1.0 + 2.0 * r.gamma * r.sigma * r.sigma;
  const double cp = pair_coeff(r.form, n);
  // dM(1/2; d/2; -c)/dc, per evaluation mode
  auto dM = [&](double c) {
    if (r.kmode == KummerMode::ImqApprox) {
      const double t = 4.0 / (2.0 * d - 3.0);
      return -0.5 * t * std::pow(1.0 + t * c, -1.5);
    }
    return -kummer_m(1.5, 0.5 * d + 1.0, -c) / d;
  };
  std::vector<double> g(Z.n * Z.d, 0.0);
  parallel_blocks(Z.n, 8, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      for (std::size_t j = 0; j < Z.n; ++j) {
        if (j == i) continue;
        const double mp = dM(r.gamma * sq_distance(Z.row(i), Z.row(j)));
        const double f = 4.0 * r.gamma * cp * mp;
        for (std::size_t k = 0; k < Z.d; ++k) g[i * Z.d + k] += f * (Z(i, k) - Z(j, k));
      }
      const double mp = dM(r.gamma / c1 * dot(Z.row(i), Z.row(i)));
      const double f = -2.0 / (n * std::sqrt(c1)) * mp * 2.0 * r.gamma / c1;
      for (std::size_t k = 0; k < Z.d; ++k) g[i * Z.d + k] += f * Z(i, k);
    }
  });
  return g;
}

inline std::vector<double> gaussian_ksd_gradient(const RegularizerSpec& r, const SampleBatch& Z) {
  const double n = static_cast<double>(Z.n);
  const double gamma = r.base.gamma;
  const double s2 = r.prior.sigma * r.prior.sigma;
  const double s4 = s2 * s2;
  const double c2 = 2.0 * gamma / s2 + 4.0 * gamma * gamma;
  const double cp = pair_coeff(r.form, n);
  std::vector<double> g(Z.n * Z.d, 0.0);
  parallel_blocks(Z.n, 8, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      for (std::size_t j = 0; j < Z.n; ++j) {
        if (j == i) continue;
        const double r2 = sq_distance(Z.row(i), Z.row(j));
        const double K = std::exp(-gamma * r2);
        const double P = dot(Z.row(i), Z.row(j)) / s4 - c2 * r2 + 2.0 * gamma * Z.d;
        for (std::size_t k = 0; k < Z.d; ++k) {
          const double diff = Z(i, k) - Z(j, k);
          const double dk = (Z(j, k) / s4 - 2.0 * c2 * diff) * K - 2.0 * gamma * diff * P * K;
          g[i * Z.d + k] += 2.0 * cp * dk;
        }
      }
      if (r.form == StatForm::VStatistic) {
        for (std::size_t k = 0; k < Z.d; ++k) g[i * Z.d + k] += (1.0 / (n * n)) * 2.0 * Z(i, k) / s4;
      }
    }
  });
  return g;
}

inline std::vector<double> sliced_mmd_gradient(const RegularizerSpec& r, const SampleBatch& Z,
                                               const DirectionSet& dirs, const QuadratureRule& rule) {
  const std::size_t m = dirs.m, u = rule.size();
  const double n = static_cast<double>(Z.n);
  const bool cosine_only = r.score_mode == ScoreMode::PseudoCodeFaithful;
  PriorSpec target = with_dim(r.prior, Z.d);
  std::vector<double> omega(u), tgt(u);
  for (std::size_t k = 0; k < u; ++k) {
    omega[k] = quadrature_omega(r.gamma, rule.knots[k]);
    tgt[k] = cf_slice(target, omega[k]);
  }
  const std::vector<double> proj = project(Z, dirs);
  // forward: per-slice CF means
  std::vector<double> R(m * u, 0.0), I(m * u, 0.0);
  parallel_blocks(m, 4, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j)
      for (std::size_t i = 0; i < Z.n; ++i) {
        const double p = proj[i * m + j];
        for (std::size_t k = 0; k < u; ++k) {
          const double a = omega[k] * p;
          R[j * u + k] += std::cos(a) / n;
          if (!cosine_only) I[j * u + k] += std::sin(a) / n;
        }
      }
  });
  // backward: d value / d proj, then chain through the projection
  std::vector<double> g(Z.n * Z.d, 0.0);
  parallel_blocks(Z.n, 8, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double p = proj[i * m + j];
        double gp = 0.0;
        for (std::size_t k = 0; k < u; ++k) {
          const double a = omega[k] * p;
          double t = (R[j * u + k] - tgt[k]) * (-omega[k] * std::sin(a));
          if (!cosine_only) t += I[j * u + k] * (omega[k] * std::cos(a));
          gp += rule.weights[k] * 2.0 * t / n;
        }
        gp /= static_cast<double>(m);
        for (std::size_t k = 0; k < Z.d; ++k) g[i * Z.d + k] += gp * dirs.dirs[j * Z.d + k];
      }
  });
  return g;
}

inline std::vector<double> sliced_ksd_gradient(const RegularizerSpec& r, const SampleBatch& Z,
                                               const DirectionSet& dirs, const QuadratureRule& rule) {
  const std::size_t m = dirs.m, u = rule.size();
  const double n = static_cast<double>(Z.n);
  std::vector<double> omega(u);
  for (std::size_t k = 0; k < u; ++k) omega[k] = quadrature_omega(r.gamma, rule.knots[k]);
  const std::vector<double> proj = project(Z, dirs);
  const bool gaussian = r.prior.kind == PriorSpec::Kind::Gaussian;
  const double s2 = r.prior.sigma * r.prior.sigma;
  auto slice_score = [&](double p) { return score_slice(r.prior, p); };
  const double ds = gaussian ? -1.0 / s2 : 0.0;  // Laplace slice score is flat a.e.

  std::vector<double> A(m * u, 0.0), B(m * u, 0.0);
  parallel_blocks(m, 4, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j)
      for (std::size_t i = 0; i < Z.n; ++i) {
        const double p = proj[i * m + j];
        const double s = slice_score(p);
        for (std::size_t k = 0; k < u; ++k) {
          const double a = omega[k] * p;
          const double c = std::cos(a), si = std::sin(a);
          A[j * u + k] += (s * c - omega[k] * si) / n;
          B[j * u + k] += (s * si + omega[k] * c) / n;
        }
      }
  });
  std::vector<double> g(Z.n * Z.d, 0.0);
  parallel_blocks(Z.n, 8, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double p = proj[i * m + j];
        const double s = slice_score(p);
        double gp = 0.0;
        for (std::size_t k = 0; k < u; ++k) {
          const double a = omega[k] * p;
          const double c = std::cos(a), si = std::sin(a);
          const double dre = ds * c - s * omega[k] * si - omega[k] * omega[k] * c;
          const double dim = ds * si + s * omega[k] * c - omega[k] * omega[k] * si;
          gp += rule.weights[k] * 2.0 * (A[j * u + k] * dre + B[j * u + k] * dim) / n;
        }
        gp /= static_cast<double>(m);
        for (std::size_t k = 0; k < Z.d; ++k) g[i * Z.d + k] += gp * dirs.dirs[j * Z.d + k];
      }
  });
  return g;
}

inline std::vector<double> vmf_gradient(const RegularizerSpec& r, const SampleBatch& Z) {
  const double n = static_cast<double>(Z.n);
  const double cp = pair_coeff(r.form, n);
  const bool energy = r.family == RegularizerSpec::Family::VmfMmd;
  std::vector<double> g(Z.n * Z.d, 0.0);
  parallel_blocks(Z.n, 8, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      for (std::size_t j = 0; j < Z.n; ++j) {
        if (j == i) continue;
        const double t = dot(Z.row(i), Z.row(j));
        double f;
        if (energy) {
          f = 2.0 * cp * r.kappa * std::exp(r.kappa * t);
        } else {
          const double e = r.kappa * std::exp(r.kappa * t);
          const double poly = r.kappa * t * t * t + t * t - r.kappa * t + Z.d - 2.0;
          const double dpoly = 3.0 * r.kappa * t * t + 2.0 * t - r.kappa;
          f = 2.0 * cp * (e * r.kappa * poly + e * dpoly);
        }
        for (std::size_t k = 0; k < Z.d; ++k) g[i * Z.d + k] += f * Z(j, k);
      }
      // V-form diagonal depends on x only radially; its tangent component is zero
    }
  });
  return g;
}

}  // namespace detail

/// Gradient of the regularizer value with respect to every particle
/// coordinate (flattened n*d). FiniteDifference uses central differences of
/// the full objective with common random numbers for stochastic estimators;
/// Analytic dispatches to the closed-form gradient when one exists.
inline std::vector<double> regularizer_gradient(const RegularizerSpec& r, const SampleBatch& Z,
                                                RngState rng, GradMode mode,
                                                double fd_step = 1e-4) {
  if (mode == GradMode::Analytic) {
    if (!has_analytic_gradient(r))
      throw unsupported_operation(std::string("regularizer_gradient: no analytic gradient for ") +
                                  r.name());
    switch (r.family) {
      case RegularizerSpec::Family::Bhep: return detail::bhep_gradient(r, Z);
      case RegularizerSpec::Family::KummerMmd: return detail::kummer_mmd_gradient(r, Z);
      case RegularizerSpec::Family::Ksd: return detail::gaussian_ksd_gradient(r, Z);
      case RegularizerSpec::Family::SlicedMmd: {
        const DirectionSet dirs = sample_directions(r.slices, Z.d, rng);
        return detail::sliced_mmd_gradient(r, Z, dirs, gauss_hermite(r.knots));
      }
      case RegularizerSpec::Family::SlicedKsd: {
        const DirectionSet dirs = sample_directions(r.slices, Z.d, rng);
        return detail::sliced_ksd_gradient(r, Z, dirs, gauss_hermite(r.knots));
      }
      case RegularizerSpec::Family::VmfMmd:
      case RegularizerSpec::Family::VmfKsd: return detail::vmf_gradient(r, Z);
      default: break;
    }
    throw std::logic_error("regularizer_gradient: unreachable");
  }
  // central finite differences; step scales with the particle RMS
  double rms = 0.0;
  for (double v : Z.data) rms += v * v;
  rms = std::sqrt(rms / static_cast<double>(Z.data.size()));
  const double h = fd_step * std::max(1.0, rms);
  SampleBatch W = Z;
  std::vector<double> g(Z.n * Z.d);
  for (std::size_t idx = 0; idx < Z.n * Z.d; ++idx) {
    const double orig = W.data[idx];
    W.data[idx] = orig + h;
    const double fp = evaluate_regularizer(r, W, rng).value;
    W.data[idx] = orig - h;
    const double fm = evaluate_regularizer(r, W, rng).value;
    W.data[idx] = orig;
    g[idx] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Squared-distance alignment between two views.
inline double alignment_loss(std::span<const double> za, std::span<const double> zb) {
  if (za.size() != zb.size() || za.empty())
    throw std::invalid_argument("alignment_loss: dimension mismatch");
  return detail::sq_distance(za, zb);
}

/// Batch objective: mean pairwise alignment across each group's positive
/// pairs plus lambda times the regularizer on the pooled embeddings.
inline double ssl_objective(const std::vector<SampleBatch>& view_groups, double lambda,
                            const RegularizerSpec& omega, RngState rng) {
  if (view_groups.empty()) throw std::invalid_argument("ssl_objective: no view groups");
  const std::size_t d = view_groups.front().d;
  std::size_t total = 0;
  double align = 0.0;
  for (const auto& g : view_groups) {
    if (g.n < 2) throw std::invalid_argument("ssl_objective: each group needs >= 2 views");
    if (g.d != d) throw std::invalid_argument("ssl_objective: inconsistent dimensions");
    double acc = 0.0;
    for (std::size_t i = 0; i < g.n; ++i)
      for (std::size_t j = i + 1; j < g.n; ++j) acc += alignment_loss(g.row(i), g.row(j));
    align += acc / (0.5 * static_cast<double>(g.n) * (static_cast<double>(g.n) - 1.0));
    total += g.n;
  }
  align /= static_cast<double>(view_groups.size());
  SampleBatch pooled(total, d);
  std::size_t at = 0;
  for (const auto& g : view_groups) {
    std::copy(g.data.begin(), g.data.end(), pooled.data.begin() + at * d);
    at += g.n;
  }
  return align + lambda * evaluate_regularizer(omega, pooled, rng).value;
}

/// Particle coordinates plus descent bookkeeping (the explicit stand-in for
/// the embedding batch).
struct FlowState {
  SampleBatch particles;
  std::size_t views_per_particle = 1;
  std::size_t step = 0;
  double lambda = 1.0;
  double step_size = 0.05;
};

struct TrajectoryPoint {
  std::size_t step = 0;
  double objective = 0.0;
  double mean_norm = 0.0;
  double var_mean = 0.0;
};

struct FlowOptions {
  GradMode grad = GradMode::FiniteDifference;
  double fd_step = 1e-4;
  std::size_t log_every = 50;
  bool sphere = false;
  double view_jitter = 0.1;  // relative to the prior sigma, when views >= 2
  // optional early stop: var_mean inside [lo, hi] at `patience` consecutive checkpoints
  double stop_var_lo = 0.0;
  double stop_var_hi = 0.0;
  std::size_t stop_patience = 0;
};

struct FlowResult {
  FlowState state;
  std::vector<TrajectoryPoint> trajectory;
};

namespace detail {

inline void renormalize_rows(SampleBatch& Z) {
  for (std::size_t i = 0; i < Z.n; ++i) {
    const double nrm = norm(Z.row(i));
    if (nrm > 0.0)
      for (std::size_t k = 0; k < Z.d; ++k) Z(i, k) /= nrm;
  }
}

inline TrajectoryPoint flow_checkpoint(std::size_t step, double objective, const SampleBatch& Z) {
  TrajectoryPoint tp;
  tp.step = step;
  tp.objective = objective;
  std::vector<double> mean(Z.d, 0.0);
  for (std::size_t i = 0; i < Z.n; ++i)
    for (std::size_t k = 0; k < Z.d; ++k) mean[k] += Z(i, k) / static_cast<double>(Z.n);
  tp.mean_norm = std::sqrt(dot(mean, mean));
  double var = 0.0;
  for (std::size_t k = 0; k < Z.d; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < Z.n; ++i) {
      const double c = Z(i, k) - mean[k];
      s += c * c;
    }
    var += s / static_cast<double>(Z.n);
  }
  tp.var_mean = var / static_cast<double>(Z.d);
  return tp;
}

}  // namespace detail

/// Gradient descent on particle coordinates minimizing
/// alignment + lambda * Omega. Views (when views_per_particle >= 2) are
/// synthetic jittered copies pooled for Omega; directions and view noise are
/// redrawn each step from a per-step stream. Sphere mode projects gradients
/// to the tangent space and renormalizes (retraction). Aborts with the step
/// index on divergence.
inline FlowResult flow_run(FlowState initial, const RegularizerSpec& omega, std::size_t steps,
                           RngState rng, FlowOptions opts = {}) {
  if (steps == 0) throw std::invalid_argument("flow_run: steps must be >= 1");
  FlowState st = std::move(initial);
  if (opts.sphere) detail::renormalize_rows(st.particles);
  FlowResult out;

  const std::size_t v = std::max<std::size_t>(1, st.views_per_particle);
  const double jitter = opts.view_jitter * omega.prior.sigma;

  // jittered views pooled for Omega; the view noise stream is separate from
  // the estimator stream so both gradient modes see identical randomness
  struct Pooled {
    SampleBatch views;
    double align;
  };
  auto make_pooled = [&](const SampleBatch& Z, RngState step_rng) {
    RandomStream noise(step_rng.with_stream(step_rng.stream + 0x9E37ULL));
    Pooled out{SampleBatch(Z.n * v, Z.d), 0.0};
    std::vector<double> views(v * Z.d);
    for (std::size_t i = 0; i < Z.n; ++i) {
      for (std::size_t a = 0; a < v; ++a)
        for (std::size_t k = 0; k < Z.d; ++k) views[a * Z.d + k] = Z(i, k) + jitter * noise.normal();
      double acc = 0.0;
      for (std::size_t a = 0; a < v; ++a)
        for (std::size_t b = a + 1; b < v; ++b) {
          double s = 0.0;
          for (std::size_t k = 0; k < Z.d; ++k) {
            const double t = views[a * Z.d + k] - views[b * Z.d + k];
            s += t * t;
          }
          acc += s;
        }
      out.align += acc / (0.5 * static_cast<double>(v) * (static_cast<double>(v) - 1.0));
      std::copy(views.begin(), views.end(), out.views.data.begin() + i * v * Z.d);
    }
    out.align /= static_cast<double>(Z.n);
    return out;
  };

  auto objective_at = [&](const SampleBatch& Z, RngState step_rng) {
    if (v < 2) return st.lambda * evaluate_regularizer(omega, Z, step_rng).value;
    Pooled p = make_pooled(Z, step_rng);
    return p.align + st.lambda * evaluate_regularizer(omega, p.views, step_rng).value;
  };

  auto gradient_at = [&](const SampleBatch& Z, RngState step_rng) -> std::vector<double> {
    if (st.lambda == 0.0 && v < 2) return std::vector<double>(Z.n * Z.d, 0.0);
    if (opts.grad == GradMode::Analytic && has_analytic_gradient(omega) && st.lambda != 0.0) {
      if (v < 2) {
        std::vector<double> g = regularizer_gradient(omega, Z, step_rng, GradMode::Analytic);
        for (double& x : g) x *= st.lambda;
        return g;
      }
      // alignment gradient w.r.t. the particles vanishes (views share them);
      // each view's regularizer gradient accumulates onto its particle
      Pooled p = make_pooled(Z, step_rng);
      const std::vector<double> gv = regularizer_gradient(omega, p.views, step_rng, GradMode::Analytic);
      std::vector<double> g(Z.n * Z.d, 0.0);
      for (std::size_t i = 0; i < Z.n; ++i)
        for (std::size_t a = 0; a < v; ++a)
          for (std::size_t k = 0; k < Z.d; ++k)
            g[i * Z.d + k] += st.lambda * gv[(i * v + a) * Z.d + k];
      return g;
    }
    // finite differences of the full objective with common random numbers
    double rms = 0.0;
    for (double x : Z.data) rms += x * x;
    rms = std::sqrt(rms / static_cast<double>(Z.data.size()));
    const double h = opts.fd_step * std::max(1.0, rms);
    SampleBatch W = Z;
    std::vector<double> g(Z.n * Z.d);
    for (std::size_t idx = 0; idx < Z.n * Z.d; ++idx) {
      const double orig = W.data[idx];
      W.data[idx] = orig + h;
      const double fp = objective_at(W, step_rng);
      W.data[idx] = orig - h;
      const double fm = objective_at(W, step_rng);
      W.data[idx] = orig;
      g[idx] = (fp - fm) / (2.0 * h);
    }
    return g;
  };

  std::size_t in_band = 0;
  const bool early = opts.stop_patience > 0 && opts.stop_var_hi > opts.stop_var_lo;
  out.trajectory.push_back(
      detail::flow_checkpoint(st.step, objective_at(st.particles, rng.with_stream(st.step)), st.particles));

  for (std::size_t s = 0; s < steps; ++s) {
    const RngState step_rng = rng.with_stream(st.step + 1);
    std::vector<double> g = gradient_at(st.particles, step_rng);
    for (double x : g)
      if (!std::isfinite(x))
        throw numerical_error("flow diverged at step " + std::to_string(st.step + 1) +
                              " (non-finite gradient)");
    if (opts.sphere) {
      for (std::size_t i = 0; i < st.particles.n; ++i) {
        double rad = 0.0;
        for (std::size_t k = 0; k < st.particles.d; ++k) rad += g[i * st.particles.d + k] * st.particles(i, k);
        for (std::size_t k = 0; k < st.particles.d; ++k)
          g[i * st.particles.d + k] -= rad * st.particles(i, k);
      }
    }
    for (std::size_t idx = 0; idx < g.size(); ++idx) st.particles.data[idx] -= st.step_size * g[idx];
    if (opts.sphere) detail::renormalize_rows(st.particles);
    ++st.step;
    for (double x : st.particles.data)
      if (!std::isfinite(x))
        throw numerical_error("flow diverged at step " + std::to_string(st.step) +
                              " (non-finite particle coordinate)");

    const bool last = s + 1 == steps;
    if (st.step % opts.log_every == 0 || last) {
      const TrajectoryPoint tp = detail::flow_checkpoint(
          st.step, objective_at(st.particles, rng.with_stream(st.step)), st.particles);
      out.trajectory.push_back(tp);
      if (early) {
        if (tp.var_mean >= opts.stop_var_lo && tp.var_mean <= opts.stop_var_hi)
          ++in_band;
        else
          in_band = 0;
        if (in_band >= opts.stop_patience) break;
      }
    }
  }
  out.state = std::move(st);
  return out;
}

/// Trajectory log: '#'-prefixed metadata lines, then step,objective,mean_norm,var_mean.
inline void write_trajectory_csv(std::ostream& os, const FlowResult& res,
                                 const std::vector<std::string>& metadata) {
  for (const auto& m : metadata) os << "# " << m << '\n';
  os << "step,objective,mean_norm,var_mean\n";
  for (const auto& tp : res.trajectory) {
    os << tp.step << ',' << detail::format_g17(tp.objective) << ','
       << detail::format_g17(tp.mean_norm) << ',' << detail::format_g17(tp.var_mean) << '\n';
  }
}

}  // namespace kerdisc
