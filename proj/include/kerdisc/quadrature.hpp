#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace kerdisc {

/// Knots and probability weights integrating against the standard normal:
/// sum_i weights[i] * f(knots[i]) ~ E_{w~N(0,1)}[f(w)]. Weights sum to 1,
/// knots are strictly increasing and symmetric about zero.
struct QuadratureRule {
  std::vector<double> knots;
  std::vector<double> weights;
  std::size_t size() const { return knots.size(); }
};

namespace detail {

/// Implicit-QL eigensolver for a symmetric tridiagonal matrix, tracking the
/// first component of each eigenvector (Golub-Welsch). diag holds the
/// diagonal and returns eigenvalues ascending; sub holds the subdiagonal in
/// sub[0..n-2]; first holds e_1 on entry and the eigenvector first
/// components on exit.
inline void tridiagonal_ql(std::vector<double>& diag, std::vector<double>& sub,
                           std::vector<double>& first) {
  const std::size_t n = diag.size();
  if (n == 1) return;
  const double prec = 2.220446049250313e-16;
  sub[n - 1] = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    std::size_t iter = 0;
    for (;;) {
      std::size_t m = l;
      for (; m < n - 1; ++m) {
        const double dd = std::abs(diag[m]) + std::abs(diag[m + 1]);
        if (std::abs(sub[m]) <= prec * dd) break;
      }
      if (m == l) break;
      if (++iter > 60) throw std::runtime_error("tridiagonal_ql: no convergence");
      double g = (diag[l + 1] - diag[l]) / (2.0 * sub[l]);
      double r = std::hypot(g, 1.0);
      g = diag[m] - diag[l] + sub[l] / (g + (g >= 0 ? std::abs(r) : -std::abs(r)));
      double s = 1.0, c = 1.0, p = 0.0;
      for (std::size_t i = m; i-- > l;) {
        double f = s * sub[i];
        const double b = c * sub[i];
        r = std::hypot(f, g);
        sub[i + 1] = r;
        if (r == 0.0) {
          diag[i + 1] -= p;
          sub[m] = 0.0;
          break;
        }
        s = f / r;
        c = g / r;
        g = diag[i + 1] - p;
        r = (diag[i] - g) * s + 2.0 * c * b;
        p = s * r;
        diag[i + 1] = g + p;
        g = c * r - b;
        f = first[i + 1];
        first[i + 1] = s * first[i] + c * f;
        first[i] = c * first[i] - s * f;
        if (i == l) break;
      }
      if (r == 0.0 && m > l + 1) continue;
      diag[l] -= p;
      sub[l] = g;
      sub[m] = 0.0;
    }
  }
  // selection sort by eigenvalue, carrying first components
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::size_t k = i;
    for (std::size_t j = i + 1; j < n; ++j)
      if (diag[j] < diag[k]) k = j;
    if (k != i) {
      std::swap(diag[i], diag[k]);
      std::swap(first[i], first[k]);
    }
  }
}

}  // namespace detail

/// Gauss-Hermite rule with u knots, renormalized to the standard normal
/// weight (exact for polynomials of degree <= 2u-1). Nodes come from the
/// Golub-Welsch Jacobi matrix of the physicists' Hermite weight; symmetric
/// nodes are exactly negated pairs.
inline QuadratureRule gauss_hermite(std::size_t u) {
  if (u == 0 || u > 256) throw std::invalid_argument("gauss_hermite: need 1 <= u <= 256");
  std::vector<double> diag(u, 0.0), sub(u, 0.0), first(u, 0.0);
  for (std::size_t k = 1; k < u; ++k) sub[k - 1] = std::sqrt(0.5 * static_cast<double>(k));
  first[0] = 1.0;
  detail::tridiagonal_ql(diag, sub, first);

  QuadratureRule rule;
  rule.knots.resize(u);
  rule.weights.resize(u);
  for (std::size_t i = 0; i < u; ++i) {
    rule.knots[i] = diag[i] * std::sqrt(2.0);  // physicists' node -> N(0,1) knot
    rule.weights[i] = first[i] * first[i];     // mu0 * z^2, with mu0 = sqrt(pi) cancelling /sqrt(pi)
  }
  // enforce exact +/- symmetry and unit mass
  for (std::size_t i = 0; i < u / 2; ++i) {
    const std::size_t j = u - 1 - i;
    const double x = 0.5 * (rule.knots[j] - rule.knots[i]);
    rule.knots[i] = -x;
    rule.knots[j] = x;
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (u % 2 == 1) rule.knots[u / 2] = 0.0;
  double mass = 0.0;
  for (double w : rule.weights) mass += w;
  for (double& w : rule.weights) w /= mass;
  return rule;
}

}  // namespace kerdisc
