#pragma once

#include <cmath>
#include <stdexcept>

namespace kerdisc {

/// Modified Bessel function of the second kind K_nu(x), x > 0.
/// K is even in the order, so negative nu is folded to |nu|.
inline double bessel_k(double nu, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("bessel_k: x must be > 0");
  return std::cyl_bessel_k(std::abs(nu), x);
}

}  // namespace kerdisc
