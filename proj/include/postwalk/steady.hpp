#pragma once

#include <vector>

#include "postwalk/density.hpp"
#include "postwalk/graph.hpp"

namespace postwalk {

/// Per-node comparison of converged populations with the diagonal
/// steady-state consistency condition of the postselected QSW.
struct ConstraintReport {
  std::vector<double> predicted;
  std::vector<double> actual;
  std::vector<double> residual;
  double max_residual = 0.0;
  bool uniform_ok = false;  ///< uniform_condition_holds for the same graph and eta
};

/// True iff I/N is a fixed point of the postselected QSW: always for eta = 0,
/// otherwise exactly when every D_k^2 + D_k is equal (regular graph).
bool uniform_condition_holds(const NetworkGraph& g, double eta);

/// Evaluates, for every node k,
///   sum_j A_kj (p (1 - eta) rho_jj + 2 (1 - p) Im rho_kj)
///   / (p (D_k (1 + eta D_k) - eta sum_j (D_j^2 + D_j) rho_jj))
/// and compares it with rho_kk. Throws for p = 0 or a vanishing denominator.
ConstraintReport constraint_residual(const DensityState& rho_ss, const NetworkGraph& g, double p, double eta);

/// Haken-Strobl fixed point, I/n.
DensityState hs_steady_state_prediction(int n);

/// Frobenius norm of [H, rho].
double commutator_norm(const Eigen::MatrixXd& hamiltonian, const ComplexMatrix& rho);

}  // namespace postwalk
