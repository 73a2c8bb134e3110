#pragma once

#include <random>

#include "postwalk/density.hpp"

namespace testing {

using postwalk::Complex;
using postwalk::ComplexMatrix;

inline ComplexMatrix random_matrix(int n, std::mt19937& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = Complex(g(rng), g(rng));
  return m;
}

// full-rank density matrix from a Ginibre sample
inline ComplexMatrix random_density(int n, std::mt19937& rng) {
  const ComplexMatrix a = random_matrix(n, rng);
  ComplexMatrix rho = a * a.adjoint();
  return rho / rho.trace();
}

inline ComplexMatrix random_hermitian(int n, std::mt19937& rng) {
  const ComplexMatrix a = random_matrix(n, rng);
  return 0.5 * (a + a.adjoint());
}

inline double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testing
