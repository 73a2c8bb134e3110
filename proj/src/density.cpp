#include "postwalk/density.hpp"

#include <cmath>
#include <sstream>

namespace postwalk {

StateDiagnostics diagnose(const ComplexMatrix& rho) {
  StateDiagnostics d;
  if (!rho.allFinite()) {
    d.finite = false;
    d.hermiticity = d.trace_drift = std::numeric_limits<double>::infinity();
    d.min_eigenvalue = -std::numeric_limits<double>::infinity();
    return d;
  }
  d.hermiticity = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  d.trace_drift = std::abs(rho.trace() - Complex(1.0, 0.0));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(rho), Eigen::EigenvaluesOnly);
  d.min_eigenvalue = solver.eigenvalues().minCoeff();
  return d;
}

ComplexMatrix hermitian_part(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

DensityState::DensityState(ComplexMatrix matrix, const Tolerances& tol) : matrix_(std::move(matrix)) {
  if (matrix_.rows() == 0 || matrix_.rows() != matrix_.cols()) {
    throw std::invalid_argument("density matrix must be square and non-empty");
  }
  const StateDiagnostics d = diagnose(matrix_);
  std::ostringstream msg;
  if (!d.finite) {
    throw InvariantViolation("finite", d.hermiticity, 0, "density matrix has non-finite entries");
  }
  if (d.hermiticity > tol.hermiticity) {
    msg << "density matrix not Hermitian: max |rho - rho^dagger| = " << d.hermiticity;
    throw InvariantViolation("hermiticity", d.hermiticity, 0, msg.str());
  }
  if (d.trace_drift > tol.trace) {
    msg << "density matrix trace deviates from 1 by " << d.trace_drift;
    throw InvariantViolation("trace", d.trace_drift, 0, msg.str());
  }
  if (d.min_eigenvalue < -tol.positivity) {
    msg << "density matrix has negative eigenvalue " << d.min_eigenvalue;
    throw InvariantViolation("positivity", d.min_eigenvalue, 0, msg.str());
  }
}

DensityState DensityState::basis_projector(int dim, int k) {
  if (dim < 1 || k < 0 || k >= dim) {
    throw std::out_of_range("basis index " + std::to_string(k) + " outside dimension " + std::to_string(dim));
  }
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  m(k, k) = 1.0;
  return DensityState(std::move(m));
}

DensityState DensityState::maximally_mixed(int dim) {
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  return DensityState(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityState DensityState::pure(const Eigen::VectorXcd& amplitudes) {
  const double norm = amplitudes.norm();
  if (norm == 0.0) throw std::invalid_argument("zero state vector");
  const Eigen::VectorXcd psi = amplitudes / norm;
  return DensityState(psi * psi.adjoint());
}

}  // namespace postwalk
