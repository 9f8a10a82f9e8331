#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "kerdisc/kummer.hpp"

namespace kerdisc {

/// Surface area of S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
inline double sphere_area(std::size_t d) {
  if (d == 0) throw std::invalid_argument("sphere_area: d must be >= 1");
  const double hd = 0.5 * static_cast<double>(d);
  return 2.0 * std::exp(hd * std::log(M_PI) - std::lgamma(hd));
}

/// J1(c) = integral over S^{d-1} of exp(-c t1^2) dt
///       = (2 pi^{d/2} / Gamma(d/2)) M(1/2; d/2; -c).
inline double j1(double c, std::size_t d) {
  if (d < 2) throw std::invalid_argument("j1: d must be >= 2");
  if (c < 0.0) throw std::invalid_argument("j1: c must be >= 0");
  return sphere_area(d) * kummer_m(0.5, 0.5 * static_cast<double>(d), -c);
}

/// J2(c) = integral over S^{d-1} of t1^2 exp(-c t1^2) dt
///       = (pi^{d/2} / Gamma(d/2 + 1)) M(3/2; d/2 + 1; -c).
inline double j2(double c, std::size_t d) {
  if (d < 2) throw std::invalid_argument("j2: d must be >= 2");
  if (c < 0.0) throw std::invalid_argument("j2: c must be >= 0");
  const double hd = 0.5 * static_cast<double>(d);
  const double pref = std::exp(hd * std::log(M_PI) - std::lgamma(hd + 1.0));
  return pref * kummer_m(1.5, hd + 1.0, -c);
}

}  // namespace kerdisc
