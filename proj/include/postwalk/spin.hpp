#pragma once

#include <vector>

#include <Eigen/Sparse>

#include "postwalk/density.hpp"
#include "postwalk/graph.hpp"
#include "postwalk/master_eq.hpp"

namespace postwalk {

inline constexpr int kMaxSpins = 8;

/// Spins on the nodes of a graph. Basis index bit (n - 1 - i) holds spin i
/// (spin 0 most significant); a set bit means spin up.
class SpinSystem {
 public:
  SpinSystem(NetworkGraph graph, double j_coupling = 1.0);

  int n_spins() const { return graph_.size(); }
  int hilbert_dim() const { return 1 << n_spins(); }
  const NetworkGraph& graph() const { return graph_; }
  double j_coupling() const { return j_coupling_; }

  /// Bit mask of spin i inside a basis index.
  int mask(int spin) const { return 1 << (n_spins() - 1 - spin); }
  /// Basis index of the state with only `spin` up.
  int single_excitation(int spin) const { return mask(spin); }

 private:
  NetworkGraph graph_;
  double j_coupling_;
};

/// Which ordered pairs of an undirected edge carry a hopping jump operator.
enum class HopOrientation { Both, Single };

/// sigma^+ on one spin, identity elsewhere (dense, Kronecker-assembled).
ComplexMatrix sigma_plus(const SpinSystem& sys, int spin);
ComplexMatrix sigma_minus(const SpinSystem& sys, int spin);

/// J sum_<ij> (s+_i s-_j + s-_i s+_j) as a dense matrix.
ComplexMatrix xy_hamiltonian(const SpinSystem& sys);
Eigen::SparseMatrix<Complex> xy_hamiltonian_sparse(const SpinSystem& sys);

/// Total excitation number sum_i s+_i s-_i (diagonal).
ComplexMatrix excitation_number(const SpinSystem& sys);

/// Jump operators s+_i s-_j moving an excitation from j to i, for every edge
/// in both orientations (or only i < j -> i receives, for Single).
JumpOperatorSet spin_hop_jumps(const SpinSystem& sys, double gamma, HopOrientation orientation = HopOrientation::Both);

/// Postselected spin-hopping right-hand side, evaluated with bit operations
/// on the basis (no dense operator products).
class SpinHopGenerator {
 public:
  SpinHopGenerator(const SpinSystem& sys, double gamma, double eta,
                   HopOrientation orientation = HopOrientation::Both);
  ComplexMatrix operator()(const ComplexMatrix& rho) const;

 private:
  struct Hop {
    std::vector<int> sources;  // basis states with spin j up and spin i down
    int flip = 0;              // xor mask turning a source into its image
  };
  std::vector<std::pair<int, int>> exchange_;  // (dst, src) basis pairs coupled by H
  double coupling_;
  std::vector<Hop> hops_;
  RealVector loss_;  // sum over jumps of <b| L^dag L |b>
  ComplexMatrix decay_;
  double gamma_;
  double eta_;
};

ComplexMatrix spin_nlme_rhs(const ComplexMatrix& rho, const SpinSystem& sys, double gamma, double eta,
                            HopOrientation orientation = HopOrientation::Both);

/// P_i = Tr(rho s+_i s-_i).
RealVector excitation_populations(const ComplexMatrix& rho, const SpinSystem& sys);

/// Two-spin reduced density matrix, spin i as the more significant qubit.
Eigen::Matrix4cd reduced_pair(const ComplexMatrix& rho, const SpinSystem& sys, int i, int j);

/// Wootters concurrence of a two-qubit density matrix.
double wootters_concurrence(const Eigen::Matrix4cd& rho_pair);

double pairwise_concurrence(const ComplexMatrix& rho, const SpinSystem& sys, int i, int j);

/// Symmetric matrix of C_ij with zero diagonal.
RealMatrix concurrence_matrix(const ComplexMatrix& rho, const SpinSystem& sys);
double max_concurrence(const ComplexMatrix& rho, const SpinSystem& sys);

/// Total population outside the single-excitation sector.
double leakage_from_single_sector(const ComplexMatrix& rho, const SpinSystem& sys);

/// Restricts a full-space operator to the single-excitation basis (spin order).
ComplexMatrix single_sector_block(const ComplexMatrix& op, const SpinSystem& sys);

/// Independent n-dimensional model of the single-excitation sector: hopping
/// Hamiltonian J*A and jumps |i><j| along the edges.
Generator make_single_sector_generator(const SpinSystem& sys, double gamma, double eta,
                                       HopOrientation orientation = HopOrientation::Both);

struct SpinTrajectory {
  std::vector<double> times;
  std::vector<RealVector> populations;
  std::vector<double> max_concurrence;
  std::vector<double> excitation_total;
  std::vector<RealMatrix> concurrence;  ///< filled when record_pairwise is set
  std::optional<DensityState> final_state;
  InvariantSummary invariants;
};

struct SpinRunConfig {
  GraphSpec graph;  ///< simple family (line, cycle, star, complete) with n spins
  double gamma = 0.5;
  double eta = 0.0;
  int initial_spin = 0;
  HopOrientation orientation = HopOrientation::Both;
  IntegrationSettings integration;
  bool stop_when_steady = false;
  bool record_pairwise = false;  ///< keep the full concurrence matrix per sample

  void validate() const;
};

SpinSystem make_spin_system(const SpinRunConfig& config);
SpinTrajectory evolve_spin(const SpinRunConfig& config);
SteadyStateResult spin_steady_state(const SpinRunConfig& config);

}  // namespace postwalk
