#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerdisc/errors.hpp"

namespace kerdisc {

/// Diagonal-free (unbiased) vs diagonal-inclusive (nonnegative, biased) pairwise form.
enum class StatForm { UStatistic, VStatistic };

/// n samples in R^d, row-major. The empirical distribution under test.
struct SampleBatch {
  std::vector<double> data;  // n * d, row-major
  std::size_t n = 0;
  std::size_t d = 0;

  SampleBatch() = default;

  SampleBatch(std::size_t n_, std::size_t d_) : data(n_ * d_, 0.0), n(n_), d(d_) {
    if (n == 0 || d == 0) throw std::invalid_argument("SampleBatch: n and d must be >= 1");
  }

  SampleBatch(std::vector<double> values, std::size_t n_, std::size_t d_)
      : data(std::move(values)), n(n_), d(d_) {
    if (n == 0 || d == 0) throw std::invalid_argument("SampleBatch: n and d must be >= 1");
    if (data.size() != n * d) throw std::invalid_argument("SampleBatch: data size != n*d");
    for (double v : data)
      if (!std::isfinite(v)) throw std::invalid_argument("SampleBatch: non-finite entry");
  }

  std::span<const double> row(std::size_t i) const { return {data.data() + i * d, d}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * d, d}; }

  double operator()(std::size_t i, std::size_t j) const { return data[i * d + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * d + j]; }

  /// True when every row has unit Euclidean norm within tol.
  bool on_unit_sphere(double tol = 1e-9) const {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += (*this)(i, j) * (*this)(i, j);
      if (std::abs(std::sqrt(s) - 1.0) > tol) return false;
    }
    return true;
  }
};

/// m unit directions in R^d, one per row.
struct DirectionSet {
  std::vector<double> dirs;  // m * d, row-major
  std::size_t m = 0;
  std::size_t d = 0;

  DirectionSet() = default;

  DirectionSet(std::vector<double> values, std::size_t m_, std::size_t d_)
      : dirs(std::move(values)), m(m_), d(d_) {
    if (m == 0 || d == 0) throw std::invalid_argument("DirectionSet: m and d must be >= 1");
    if (dirs.size() != m * d) throw std::invalid_argument("DirectionSet: data size != m*d");
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += dirs[i * d + j] * dirs[i * d + j];
      if (std::abs(std::sqrt(s) - 1.0) > 1e-12)
        throw std::invalid_argument("DirectionSet: row " + std::to_string(i) + " is not unit norm");
    }
  }

  std::span<const double> row(std::size_t i) const { return {dirs.data() + i * d, d}; }
};

/// Scalar discrepancy value plus provenance metadata. slices/knots are zero
/// when the estimator does not use them.
struct DiscrepancyEstimate {
  double value = 0.0;
  std::string estimator;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t slices = 0;
  std::size_t knots = 0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sq_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void require_finite(double v, const char* who) {
  if (!std::isfinite(v)) throw numerical_error(std::string(who) + ": produced a non-finite value");
}

}  // namespace detail

}  // namespace kerdisc
