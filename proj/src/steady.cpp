#include "postwalk/steady.hpp"

#include <cmath>
#include <stdexcept>

namespace postwalk {

bool uniform_condition_holds(const NetworkGraph& g, double eta) {
  if (eta == 0.0) return true;
  const Eigen::VectorXi& d = g.degrees();
  const int reference = d(0) * d(0) + d(0);
  for (Eigen::Index k = 1; k < d.size(); ++k)
    if (d(k) * d(k) + d(k) != reference) return false;
  return true;
}

ConstraintReport constraint_residual(const DensityState& rho_ss, const NetworkGraph& g, double p, double eta) {
  const int n = g.size();
  if (rho_ss.dim() != n) throw std::invalid_argument("constraint_residual: dimension mismatch");
  if (!(p > 0.0)) throw std::invalid_argument("constraint_residual: p must be > 0 (the condition presupposes decoherence)");

  const ComplexMatrix& rho = rho_ss.matrix();
  const Eigen::VectorXd pops = rho.diagonal().real();
  const Eigen::VectorXd deg = g.degrees().cast<double>();
  const double weighted = (deg.array().square() + deg.array()).matrix().dot(pops);

  ConstraintReport report;
  report.uniform_ok = uniform_condition_holds(g, eta);
  for (int k = 0; k < n; ++k) {
    double numerator = 0.0;
    for (int j = 0; j < n; ++j) {
      if (!g.adjacent(k, j)) continue;
      numerator += p * (1.0 - eta) * pops(j) + 2.0 * (1.0 - p) * rho(k, j).imag();
    }
    const double denominator = p * (deg(k) * (1.0 + eta * deg(k)) - eta * weighted);
    if (std::abs(denominator) < 1e-12) {
      throw std::domain_error("constraint_residual: vanishing denominator at node " + std::to_string(k));
    }
    const double predicted = numerator / denominator;
    const double r = std::abs(pops(k) - predicted);
    report.predicted.push_back(predicted);
    report.actual.push_back(pops(k));
    report.residual.push_back(r);
    report.max_residual = std::max(report.max_residual, r);
  }
  return report;
}

DensityState hs_steady_state_prediction(int n) { return DensityState::maximally_mixed(n); }

double commutator_norm(const Eigen::MatrixXd& hamiltonian, const ComplexMatrix& rho) {
  const ComplexMatrix h = hamiltonian.cast<Complex>();
  return (h * rho - rho * h).norm();
}

}  // namespace postwalk
