#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kerdisc/rng.hpp"
#include "kerdisc/types.hpp"

namespace kerdisc {

/// m independent uniform draws on S^{d-1}, by normalizing standard Gaussian
/// vectors. A zero draw (possible only in fixed precision) is resampled.
inline DirectionSet sample_directions(std::size_t m, std::size_t d, RngState rng) {
  if (m == 0 || d == 0) throw std::invalid_argument("sample_directions: m and d must be >= 1");
  RandomStream stream(rng);
  std::vector<double> out(m * d);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < m; ++i) {
    double nrm = 0.0;
    do {
      nrm = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        row[j] = stream.normal();
        nrm += row[j] * row[j];
      }
      nrm = std::sqrt(nrm);
    } while (nrm == 0.0);
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = row[j] / nrm;
  }
  return DirectionSet(std::move(out), m, d);
}

/// Projections of every sample onto every direction; entry (i, j) is the
/// inner product of sample i with direction j. Row-major n x m.
inline std::vector<double> project(const SampleBatch& batch, const DirectionSet& dirs) {
  if (batch.d != dirs.d) throw std::invalid_argument("project: dimension mismatch");
  std::vector<double> out(batch.n * dirs.m);
  for (std::size_t i = 0; i < batch.n; ++i) {
    const double* x = batch.data.data() + i * batch.d;
    for (std::size_t j = 0; j < dirs.m; ++j) {
      const double* t = dirs.dirs.data() + j * dirs.d;
      double s = 0.0;
      for (std::size_t k = 0; k < batch.d; ++k) s += x[k] * t[k];
      out[i * dirs.m + j] = s;
    }
  }
  return out;
}

}  // namespace kerdisc
