#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerdisc/bessel.hpp"
#include "kerdisc/errors.hpp"
#include "kerdisc/geometry.hpp"
#include "kerdisc/rng.hpp"
#include "kerdisc/types.hpp"

namespace kerdisc {

/// Isotropic target distribution: density, score, characteristic function
/// and sampler. StudentT requires nu > 2 so moment-based checks stay finite.
struct PriorSpec {
  enum class Kind { Gaussian, Laplace, StudentT, UniformSphere };
  Kind kind = Kind::Gaussian;
  double sigma = 1.0;
  double nu = 5.0;
  std::size_t d = 1;

  static PriorSpec gaussian(double sigma, std::size_t d) {
    if (!(sigma > 0)) throw std::invalid_argument("PriorSpec: sigma must be > 0");
    return {Kind::Gaussian, sigma, 5.0, d};
  }
  static PriorSpec laplace(double sigma, std::size_t d) {
    if (!(sigma > 0)) throw std::invalid_argument("PriorSpec: sigma must be > 0");
    return {Kind::Laplace, sigma, 5.0, d};
  }
  static PriorSpec student_t(double nu, double sigma, std::size_t d) {
    if (!(sigma > 0)) throw std::invalid_argument("PriorSpec: sigma must be > 0");
    if (!(nu > 2)) throw std::invalid_argument("PriorSpec: StudentT needs nu > 2");
    return {Kind::StudentT, sigma, nu, d};
  }
  static PriorSpec uniform_sphere(std::size_t d) { return {Kind::UniformSphere, 1.0, 5.0, d}; }

  const char* name() const {
    switch (kind) {
      case Kind::Gaussian: return "gaussian";
      case Kind::Laplace: return "laplace";
      case Kind::StudentT: return "student-t";
      case Kind::UniformSphere: return "uniform-sphere";
    }
    return "?";
  }
};

/// Score s_Q(x) = grad log q(x). The Laplace score at x = 0 uses the
/// subgradient convention (zero vector) and sets *degenerate when provided.
inline std::vector<double> score(const PriorSpec& p, std::span<const double> x,
                                 bool* degenerate = nullptr) {
  if (x.size() != p.d) throw std::invalid_argument("score: dimension mismatch");
  std::vector<double> s(p.d, 0.0);
  switch (p.kind) {
    case PriorSpec::Kind::Gaussian: {
      const double inv = 1.0 / (p.sigma * p.sigma);
      for (std::size_t i = 0; i < p.d; ++i) s[i] = -x[i] * inv;
      return s;
    }
    case PriorSpec::Kind::Laplace: {
      const double r = detail::norm(x);
      if (r == 0.0) {
        if (degenerate) *degenerate = true;
        return s;
      }
      const double f = -1.0 / (p.sigma * r);
      for (std::size_t i = 0; i < p.d; ++i) s[i] = f * x[i];
      return s;
    }
    case PriorSpec::Kind::StudentT: {
      const double r2 = detail::dot(x, x);
      const double f = -(p.nu + static_cast<double>(p.d)) / (p.nu * p.sigma * p.sigma + r2);
      for (std::size_t i = 0; i < p.d; ++i) s[i] = f * x[i];
      return s;
    }
    case PriorSpec::Kind::UniformSphere:
      return s;  // score of the uniform distribution vanishes on the sphere
  }
  throw std::logic_error("score: unreachable");
}

/// Characteristic function on R^d. Real-valued: all supported priors are
/// symmetric. UniformSphere has no ambient CF here.
inline double cf_full(const PriorSpec& p, std::span<const double> omega) {
  if (omega.size() != p.d) throw std::invalid_argument("cf_full: dimension mismatch");
  const double w2 = detail::dot(omega, omega);
  switch (p.kind) {
    case PriorSpec::Kind::Gaussian:
      return std::exp(-0.5 * p.sigma * p.sigma * w2);
    case PriorSpec::Kind::Laplace:
      return std::pow(1.0 + p.sigma * p.sigma * w2, -0.5 * (static_cast<double>(p.d) + 1.0));
    case PriorSpec::Kind::StudentT: {
      if (w2 == 0.0) return 1.0;
      const double arg = std::sqrt(p.nu) * p.sigma * std::sqrt(w2);
      const double h = 0.5 * p.nu;
      return bessel_k(h, arg) * std::pow(arg, h) / (std::tgamma(h) * std::pow(2.0, h - 1.0));
    }
    case PriorSpec::Kind::UniformSphere:
      throw unsupported_operation("cf_full: UniformSphere prior is used on-manifold only");
  }
  throw std::logic_error("cf_full: unreachable");
}

/// Per-slice target CF used by the finite-sliced regularizers. Matches the
/// reference arithmetic exactly: Gaussian exp(-sigma^2 w^2 / 2) and Laplace
/// (1 + sigma^2 w^2)^{-1}. Note the Laplace form is the univariate Laplace
/// CF, not the CF of a 1-D projection of the isotropic multivariate Laplace;
/// see cf_slice_true for the latter.
inline double cf_slice(const PriorSpec& p, double omega) {
  switch (p.kind) {
    case PriorSpec::Kind::Gaussian:
      return std::exp(-0.5 * p.sigma * p.sigma * omega * omega);
    case PriorSpec::Kind::Laplace:
      return 1.0 / (1.0 + p.sigma * p.sigma * omega * omega);
    default:
      throw unsupported_operation("cf_slice: only Gaussian and Laplace priors have a sliced path");
  }
}

/// Exact CF of theta^T X for unit theta: by isotropy this is cf_full
/// evaluated along any ray, so the Laplace case carries the (d+1)/2 exponent.
inline double cf_slice_true(const PriorSpec& p, double omega) {
  switch (p.kind) {
    case PriorSpec::Kind::Gaussian:
      return std::exp(-0.5 * p.sigma * p.sigma * omega * omega);
    case PriorSpec::Kind::Laplace:
      return std::pow(1.0 + p.sigma * p.sigma * omega * omega,
                      -0.5 * (static_cast<double>(p.d) + 1.0));
    default:
      throw unsupported_operation("cf_slice_true: only Gaussian and Laplace priors");
  }
}

/// 1-D per-slice score applied to a projected value, as in the reference
/// pseudo-code: Gaussian -z/sigma^2, Laplace -sign(z)/sigma.
inline double score_slice(const PriorSpec& p, double z) {
  switch (p.kind) {
    case PriorSpec::Kind::Gaussian:
      return -z / (p.sigma * p.sigma);
    case PriorSpec::Kind::Laplace:
      return z == 0.0 ? 0.0 : (z > 0.0 ? -1.0 : 1.0) / p.sigma;
    default:
      throw unsupported_operation("score_slice: only Gaussian and Laplace priors have a sliced path");
  }
}

/// n iid draws from the prior.
inline SampleBatch sample(const PriorSpec& p, std::size_t n, RngState rng) {
  if (n == 0) throw std::invalid_argument("sample: n must be >= 1");
  if (p.kind == PriorSpec::Kind::UniformSphere) {
    DirectionSet dirs = sample_directions(n, p.d, rng);
    return SampleBatch(std::move(dirs.dirs), n, p.d);
  }
  RandomStream stream(rng);
  SampleBatch out(n, p.d);
  switch (p.kind) {
    case PriorSpec::Kind::Gaussian:
      for (double& v : out.data) v = p.sigma * stream.normal();
      break;
    case PriorSpec::Kind::Laplace:
      // density ~ exp(-|x|/sigma): uniform direction, radius ~ Gamma(d, sigma)
      for (std::size_t i = 0; i < n; ++i) {
        double nrm = 0.0;
        do {
          nrm = 0.0;
          for (std::size_t j = 0; j < p.d; ++j) {
            out(i, j) = stream.normal();
            nrm += out(i, j) * out(i, j);
          }
          nrm = std::sqrt(nrm);
        } while (nrm == 0.0);
        const double r = stream.gamma(static_cast<double>(p.d), p.sigma);
        for (std::size_t j = 0; j < p.d; ++j) out(i, j) *= r / nrm;
      }
      break;
    case PriorSpec::Kind::StudentT:
      for (std::size_t i = 0; i < n; ++i) {
        const double w = std::sqrt(stream.chi_square(p.nu) / p.nu);
        for (std::size_t j = 0; j < p.d; ++j) out(i, j) = p.sigma * stream.normal() / w;
      }
      break;
    default:
      break;
  }
  return out;
}

/// Log density including the normalizing constant.
inline double log_density(const PriorSpec& p, std::span<const double> x) {
  if (x.size() != p.d) throw std::invalid_argument("log_density: dimension mismatch");
  const double d = static_cast<double>(p.d);
  const double r2 = detail::dot(x, x);
  switch (p.kind) {
    case PriorSpec::Kind::Gaussian:
      return -0.5 * d * std::log(2.0 * M_PI * p.sigma * p.sigma) - 0.5 * r2 / (p.sigma * p.sigma);
    case PriorSpec::Kind::Laplace:
      return std::lgamma(0.5 * d) - std::log(2.0) - 0.5 * d * std::log(M_PI) -
             d * std::log(p.sigma) - std::lgamma(d) - std::sqrt(r2) / p.sigma;
    case PriorSpec::Kind::StudentT:
      return std::lgamma(0.5 * (p.nu + d)) - std::lgamma(0.5 * p.nu) -
             0.5 * d * std::log(p.nu * M_PI * p.sigma * p.sigma) -
             0.5 * (p.nu + d) * std::log1p(r2 / (p.nu * p.sigma * p.sigma));
    case PriorSpec::Kind::UniformSphere:
      throw unsupported_operation("log_density: UniformSphere has no ambient density");
  }
  throw std::logic_error("log_density: unreachable");
}

}  // namespace kerdisc
