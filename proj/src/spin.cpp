#include "postwalk/spin.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <functional>
#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/KroneckerProduct>

namespace postwalk {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kEigenClamp = 1e-10;

ComplexMatrix single_site(const SpinSystem& sys, int spin, const Eigen::Matrix2cd& local) {
  if (spin < 0 || spin >= sys.n_spins()) throw std::out_of_range("spin index out of range");
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (int s = 0; s < sys.n_spins(); ++s) {
    const ComplexMatrix factor = s == spin ? ComplexMatrix(local) : ComplexMatrix(ComplexMatrix::Identity(2, 2));
    out = Eigen::kroneckerProduct(out, factor).eval();
  }
  return out;
}

// ordered (receiver, donor) pairs
std::vector<std::pair<int, int>> hop_pairs(const SpinSystem& sys, HopOrientation orientation) {
  std::vector<std::pair<int, int>> pairs;
  for (const auto& [a, b] : sys.graph().edges()) {
    pairs.emplace_back(a, b);
    if (orientation == HopOrientation::Both) pairs.emplace_back(b, a);
  }
  return pairs;
}

void check_dim(const ComplexMatrix& rho, const SpinSystem& sys) {
  if (rho.rows() != sys.hilbert_dim() || rho.cols() != sys.hilbert_dim()) {
    throw std::invalid_argument("spin state dimension " + std::to_string(rho.rows()) + " does not match 2^" +
                                std::to_string(sys.n_spins()));
  }
}

}  // namespace

SpinSystem::SpinSystem(NetworkGraph graph, double j_coupling) : graph_(std::move(graph)), j_coupling_(j_coupling) {
  if (graph_.size() < 2) throw std::invalid_argument("spin system needs at least 2 spins");
  if (graph_.size() > kMaxSpins) {
    throw std::invalid_argument("spin system limited to " + std::to_string(kMaxSpins) + " spins, got " +
                                std::to_string(graph_.size()));
  }
  if (!graph_.is_connected()) throw std::invalid_argument("spin graph must be connected");
}

ComplexMatrix sigma_plus(const SpinSystem& sys, int spin) {
  Eigen::Matrix2cd up;
  up << 0, 0, 1, 0;  // site index 0 = down, 1 = up
  return single_site(sys, spin, up);
}

ComplexMatrix sigma_minus(const SpinSystem& sys, int spin) { return sigma_plus(sys, spin).adjoint(); }

Eigen::SparseMatrix<Complex> xy_hamiltonian_sparse(const SpinSystem& sys) {
  std::vector<Eigen::Triplet<Complex>> entries;
  const int dim = sys.hilbert_dim();
  for (const auto& [i, j] : sys.graph().edges()) {
    const int mi = sys.mask(i), mj = sys.mask(j);
    for (int b = 0; b < dim; ++b) {
      // exchange couples states where exactly one of the two spins is up
      if (((b & mi) != 0) != ((b & mj) != 0)) entries.emplace_back(b ^ (mi | mj), b, sys.j_coupling());
    }
  }
  Eigen::SparseMatrix<Complex> h(dim, dim);
  h.setFromTriplets(entries.begin(), entries.end());
  return h;
}

ComplexMatrix xy_hamiltonian(const SpinSystem& sys) { return ComplexMatrix(xy_hamiltonian_sparse(sys)); }

ComplexMatrix excitation_number(const SpinSystem& sys) {
  ComplexMatrix n = ComplexMatrix::Zero(sys.hilbert_dim(), sys.hilbert_dim());
  for (int b = 0; b < sys.hilbert_dim(); ++b) n(b, b) = std::popcount(static_cast<unsigned>(b));
  return n;
}

JumpOperatorSet spin_hop_jumps(const SpinSystem& sys, double gamma, HopOrientation orientation) {
  JumpOperatorSet set;
  set.rate = gamma;
  for (const auto& [i, j] : hop_pairs(sys, orientation)) set.operators.push_back(sigma_plus(sys, i) * sigma_minus(sys, j));
  return set;
}

SpinHopGenerator::SpinHopGenerator(const SpinSystem& sys, double gamma, double eta, HopOrientation orientation)
    : coupling_(sys.j_coupling()), loss_(RealVector::Zero(sys.hilbert_dim())), gamma_(gamma), eta_(eta) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
  for (const auto& [i, j] : hop_pairs(sys, orientation)) {
    Hop hop;
    hop.flip = sys.mask(i) | sys.mask(j);
    for (int b = 0; b < sys.hilbert_dim(); ++b) {
      if ((b & sys.mask(j)) != 0 && (b & sys.mask(i)) == 0) {
        hop.sources.push_back(b);
        loss_(b) += 1.0;
      }
    }
    hops_.push_back(std::move(hop));
  }
  const auto dim = sys.hilbert_dim();
  for (const auto& [i, j] : sys.graph().edges()) {
    const int mi = sys.mask(i), mj = sys.mask(j);
    for (int b = 0; b < dim; ++b)
      if (((b & mi) != 0) != ((b & mj) != 0)) exchange_.emplace_back(b ^ (mi | mj), b);
  }
  decay_.resize(dim, dim);
  for (int c = 0; c < dim; ++c)
    for (int r = 0; r < dim; ++r) decay_(r, c) = -0.5 * gamma * (loss_(r) + loss_(c));
}

ComplexMatrix SpinHopGenerator::operator()(const ComplexMatrix& rho) const {
  const auto dim = decay_.rows();
  if (rho.rows() != dim || rho.cols() != dim) throw std::invalid_argument("spin_nlme_rhs: dimension mismatch");

  ComplexMatrix h_rho = ComplexMatrix::Zero(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c)
    for (const auto& [dst, src] : exchange_) h_rho(dst, c) += rho(src, c);
  h_rho *= coupling_;
  // H is Hermitian, so rho H = (H rho)^dagger
  const double monitored = eta_ * gamma_ * loss_.dot(rho.diagonal().real());
  ComplexMatrix out = decay_.cwiseProduct(rho) + monitored * rho - kI * h_rho + kI * h_rho.adjoint();
  const Complex refill = gamma_ * (1.0 - eta_);
  for (const Hop& hop : hops_) {
    for (int d : hop.sources) {
      const int dc = d ^ hop.flip;
      for (int b : hop.sources) out(b ^ hop.flip, dc) += refill * rho(b, d);
    }
  }
  return out;
}

ComplexMatrix spin_nlme_rhs(const ComplexMatrix& rho, const SpinSystem& sys, double gamma, double eta,
                            HopOrientation orientation) {
  check_dim(rho, sys);
  return SpinHopGenerator(sys, gamma, eta, orientation)(rho);
}

RealVector excitation_populations(const ComplexMatrix& rho, const SpinSystem& sys) {
  check_dim(rho, sys);
  RealVector p = RealVector::Zero(sys.n_spins());
  for (int b = 0; b < sys.hilbert_dim(); ++b) {
    const double w = rho(b, b).real();
    for (int i = 0; i < sys.n_spins(); ++i)
      if ((b & sys.mask(i)) != 0) p(i) += w;
  }
  return p;
}

Eigen::Matrix4cd reduced_pair(const ComplexMatrix& rho, const SpinSystem& sys, int i, int j) {
  check_dim(rho, sys);
  if (i == j) throw std::invalid_argument("reduced_pair needs two distinct spins");
  if (i < 0 || j < 0 || i >= sys.n_spins() || j >= sys.n_spins()) throw std::out_of_range("spin index out of range");
  const int mi = sys.mask(i), mj = sys.mask(j);
  const auto local = [&](int b) { return ((b & mi) != 0 ? 2 : 0) + ((b & mj) != 0 ? 1 : 0); };
  Eigen::Matrix4cd out = Eigen::Matrix4cd::Zero();
  for (int b = 0; b < sys.hilbert_dim(); ++b) {
    const int rest = b & ~(mi | mj);
    for (int d = 0; d < sys.hilbert_dim(); ++d) {
      if ((d & ~(mi | mj)) != rest) continue;
      out(local(b), local(d)) += rho(b, d);
    }
  }
  return out;
}

double wootters_concurrence(const Eigen::Matrix4cd& rho_pair) {
  Eigen::Matrix4cd flip;
  flip << 0, 0, 0, -1, 0, 0, 1, 0, 0, 1, 0, 0, -1, 0, 0, 0;  // sigma_y (x) sigma_y
  const Eigen::Matrix4cd rho = 0.5 * (rho_pair + rho_pair.adjoint());
  const Eigen::Matrix4cd tilde = flip * rho.conjugate() * flip;

  // R = rho tilde is similar to sqrt(rho) tilde sqrt(rho), which is Hermitian
  // and positive semidefinite, so its spectrum is real by construction.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> rho_solver(rho);
  const Eigen::Vector4d rho_eigs = rho_solver.eigenvalues();
  if (rho_eigs.minCoeff() < -kEigenClamp) {
    throw InvariantViolation("positivity", rho_eigs.minCoeff(), 0,
                             "concurrence: reduced state has eigenvalue " + std::to_string(rho_eigs.minCoeff()));
  }
  const Eigen::Matrix4cd sqrt_rho = rho_solver.eigenvectors() *
                                    rho_eigs.cwiseMax(0.0).cwiseSqrt().cast<Complex>().asDiagonal() *
                                    rho_solver.eigenvectors().adjoint();
  const Eigen::Matrix4cd m = sqrt_rho * tilde * sqrt_rho;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  Eigen::Vector4d eigs = solver.eigenvalues();
  if (eigs.minCoeff() < -kEigenClamp) {
    throw InvariantViolation("positivity", eigs.minCoeff(),
                             0, "concurrence: R has negative eigenvalue " + std::to_string(eigs.minCoeff()));
  }
  std::array<double, 4> lambda{};
  for (int k = 0; k < 4; ++k) lambda[static_cast<std::size_t>(k)] = std::sqrt(std::max(eigs(k), 0.0));
  std::sort(lambda.begin(), lambda.end(), std::greater<>());
  return std::clamp(lambda[0] - lambda[1] - lambda[2] - lambda[3], 0.0, 1.0);
}

double pairwise_concurrence(const ComplexMatrix& rho, const SpinSystem& sys, int i, int j) {
  return wootters_concurrence(reduced_pair(rho, sys, i, j));
}

RealMatrix concurrence_matrix(const ComplexMatrix& rho, const SpinSystem& sys) {
  const int n = sys.n_spins();
  RealMatrix c = RealMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) c(i, j) = c(j, i) = pairwise_concurrence(rho, sys, i, j);
  return c;
}

double max_concurrence(const ComplexMatrix& rho, const SpinSystem& sys) {
  return concurrence_matrix(rho, sys).maxCoeff();
}

double leakage_from_single_sector(const ComplexMatrix& rho, const SpinSystem& sys) {
  check_dim(rho, sys);
  double out = 0.0;
  for (int b = 0; b < sys.hilbert_dim(); ++b)
    if (std::popcount(static_cast<unsigned>(b)) != 1) out += std::abs(rho(b, b).real());
  return out;
}

ComplexMatrix single_sector_block(const ComplexMatrix& op, const SpinSystem& sys) {
  check_dim(op, sys);
  const int n = sys.n_spins();
  ComplexMatrix block(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) block(i, j) = op(sys.single_excitation(i), sys.single_excitation(j));
  return block;
}

Generator make_single_sector_generator(const SpinSystem& sys, double gamma, double eta, HopOrientation orientation) {
  const int n = sys.n_spins();
  const ComplexMatrix h = sys.j_coupling() * sys.graph().adjacency().cast<double>().cast<Complex>();
  JumpOperatorSet jumps;
  jumps.rate = gamma;
  for (const auto& [i, j] : hop_pairs(sys, orientation)) {
    ComplexMatrix op = ComplexMatrix::Zero(n, n);
    op(i, j) = 1.0;
    jumps.operators.push_back(std::move(op));
  }
  return [h, jumps, eta](const ComplexMatrix& rho) { return nlme_rhs_generic(rho, h, jumps, eta, 1.0); };
}

void SpinRunConfig::validate() const {
  if (is_grid_family(graph.family)) throw std::invalid_argument("spin runs use line, cycle, star or complete graphs");
  if (graph.n > kMaxSpins) {
    throw std::invalid_argument("n_spins = " + std::to_string(graph.n) + " exceeds the limit of " +
                                std::to_string(kMaxSpins));
  }
  if (!graph.defects.empty()) throw std::invalid_argument("spin runs do not support defects");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
  if (initial_spin < 0 || initial_spin >= graph.n) throw std::out_of_range("initial_spin out of range");
  integration.validate();
}

SpinSystem make_spin_system(const SpinRunConfig& config) {
  config.validate();
  return SpinSystem(build_simple_topology(config.graph.n, parse_simple_kind(config.graph.family)));
}

SpinTrajectory evolve_spin(const SpinRunConfig& config) {
  const SpinSystem sys = make_spin_system(config);
  const SpinHopGenerator rhs(sys, config.gamma, config.eta, config.orientation);
  ComplexMatrix rho = DensityState::basis_projector(sys.hilbert_dim(), sys.single_excitation(config.initial_spin)).matrix();

  SpinTrajectory traj;
  SteadyDetector detector(rhs, config.integration.tol.steady);
  traj.invariants = integrate(rhs, rho, config.integration, [&](double t, const ComplexMatrix& state) {
    traj.times.push_back(t);
    const RealVector p = excitation_populations(state, sys);
    traj.excitation_total.push_back(p.sum());
    traj.populations.push_back(p);
    const RealMatrix c = concurrence_matrix(state, sys);
    traj.max_concurrence.push_back(c.maxCoeff());
    if (config.record_pairwise) traj.concurrence.push_back(c);
    return !(config.stop_when_steady && detector.update(state));
  });
  traj.final_state.emplace(rho, config.integration.tol);
  return traj;
}

SteadyStateResult spin_steady_state(const SpinRunConfig& config) {
  const SpinSystem sys = make_spin_system(config);
  if (!(config.gamma > 0.0)) throw std::invalid_argument("steady state needs gamma > 0");
  const SpinHopGenerator rhs(sys, config.gamma, config.eta, config.orientation);
  const ComplexMatrix initial =
      DensityState::basis_projector(sys.hilbert_dim(), sys.single_excitation(config.initial_spin)).matrix();
  return steady_state(rhs, initial, config.integration);
}

}  // namespace postwalk
