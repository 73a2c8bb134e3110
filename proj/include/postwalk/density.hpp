#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace postwalk {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Thresholds used when validating density matrices and detecting convergence.
struct Tolerances {
  double hermiticity = 1e-10;  ///< max |rho - rho^dagger| elementwise
  double trace = 1e-8;         ///< |Tr rho - 1|
  double positivity = 1e-8;    ///< smallest eigenvalue must be >= -positivity
  double steady = 1e-9;        ///< Frobenius norm of d(rho)/dt for steady-state detection
};

/// A numerical invariant (trace, hermiticity, positivity, finiteness) was broken.
class InvariantViolation : public std::runtime_error {
 public:
  InvariantViolation(std::string quantity, double magnitude, long step, const std::string& what)
      : std::runtime_error(what), quantity_(std::move(quantity)), magnitude_(magnitude), step_(step) {}

  const std::string& quantity() const { return quantity_; }
  double magnitude() const { return magnitude_; }
  long step() const { return step_; }

 private:
  std::string quantity_;
  double magnitude_;
  long step_;
};

/// Steady-state search ran out of time.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(double residual, double t, const std::string& what)
      : std::runtime_error(what), residual_(residual), time_(t) {}

  double residual() const { return residual_; }
  double time() const { return time_; }

 private:
  double residual_;
  double time_;
};

/// Measured deviations of a matrix from the density-matrix invariants.
struct StateDiagnostics {
  double hermiticity = 0.0;  ///< max |rho - rho^dagger|
  double trace_drift = 0.0;  ///< |Tr rho - 1|
  double min_eigenvalue = 0.0;
  bool finite = true;
};

StateDiagnostics diagnose(const ComplexMatrix& rho);

/// Worst-case invariant values observed along an integration.
struct InvariantSummary {
  double max_trace_drift = 0.0;  ///< largest per-step |Tr rho - 1| before renormalization
  double max_hermiticity = 0.0;  ///< largest anti-Hermitian residue before re-hermitization
  double min_eigenvalue = 1.0;   ///< smallest eigenvalue seen at any sample
  long steps = 0;
  double t_end = 0.0;
};

/// Hermitian, unit-trace, positive-semidefinite matrix. Validated on construction.
class DensityState {
 public:
  explicit DensityState(ComplexMatrix matrix, const Tolerances& tol = {});

  static DensityState basis_projector(int dim, int k);
  static DensityState maximally_mixed(int dim);
  static DensityState pure(const Eigen::VectorXcd& amplitudes);

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const ComplexMatrix& matrix() const { return matrix_; }
  Complex operator()(int r, int c) const { return matrix_(r, c); }

  RealVector populations() const { return matrix_.diagonal().real(); }

 private:
  ComplexMatrix matrix_;
};

/// Returns (m + m^dagger) / 2.
ComplexMatrix hermitian_part(const ComplexMatrix& m);

}  // namespace postwalk
