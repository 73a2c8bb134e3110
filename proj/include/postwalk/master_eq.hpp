#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "postwalk/density.hpp"
#include "postwalk/graph.hpp"
#include "postwalk/observables.hpp"

namespace postwalk {

enum class ChannelKind { HakenStrobl, Qsw, SpinHop };

std::string to_string(ChannelKind kind);
ChannelKind parse_channel_kind(const std::string& name);

/// Decoherence specification. `eta` is the detection (postselection)
/// efficiency; `gamma` the jump rate for HakenStrobl/SpinHop; `p` the
/// coherent/incoherent interpolation strength for QSW.
struct NoiseChannel {
  ChannelKind kind = ChannelKind::Qsw;
  double eta = 0.0;
  double gamma = 0.0;
  double p = 0.0;

  static NoiseChannel haken_strobl(double gamma, double eta);
  static NoiseChannel qsw(double p, double eta);
  static NoiseChannel spin_hop(double gamma, double eta);

  void validate() const;
  double coherent_weight() const { return kind == ChannelKind::Qsw ? 1.0 - p : 1.0; }
  double rate() const { return kind == ChannelKind::Qsw ? p : gamma; }
};

struct JumpOperatorSet {
  std::vector<ComplexMatrix> operators;
  double rate = 1.0;
};

/// |k><k| for every node.
JumpOperatorSet haken_strobl_jumps(int n, double gamma);
/// H_kj |k><j| for every ordered pair with H_kj != 0, diagonal included.
JumpOperatorSet qsw_jumps(const Eigen::MatrixXd& hamiltonian, double p);

/// -i w [H, rho] + rate * sum_k ( -1/2 {P_k^dag P_k, rho} + (1 - eta) P_k rho P_k^dag
///                                 + eta Tr(P_k^dag P_k rho) rho )
ComplexMatrix nlme_rhs_generic(const ComplexMatrix& rho, const ComplexMatrix& hamiltonian,
                               const JumpOperatorSet& jumps, double eta, double coherent_weight);

/// QSW right-hand side from degrees and adjacency only (no operator list).
ComplexMatrix qsw_rhs_closed_form(const ComplexMatrix& rho, const NetworkGraph& g, double p, double eta);

/// -i[H, rho] - gamma (1 - eta) (rho - diag(rho))
ComplexMatrix hs_rhs_closed_form(const ComplexMatrix& rho, const Eigen::MatrixXd& hamiltonian, double gamma,
                                 double eta);

using Generator = std::function<ComplexMatrix(const ComplexMatrix&)>;

/// Closed-form QSW generator with the graph-derived quantities precomputed.
class QswGenerator {
 public:
  QswGenerator(const NetworkGraph& g, double p, double eta);
  ComplexMatrix operator()(const ComplexMatrix& rho) const;

 private:
  ComplexMatrix hamiltonian_;
  Eigen::MatrixXd adjacency_;
  RealVector degree_sq_;     // D_k^2
  RealVector outflow_;       // D_k^2 + D_k
  double p_;
  double eta_;
};

/// Right-hand side for a node-basis walk under a HakenStrobl or QSW channel.
Generator make_walk_generator(const NetworkGraph& g, const NoiseChannel& channel);

struct IntegrationSettings {
  double dt = 0.005;
  double t_max = 100.0;
  double sample_interval = 0.1;
  Tolerances tol;

  void validate() const;
};

/// Called at t = 0 and at every sample; return false to stop integrating.
using SampleObserver = std::function<bool(double t, const ComplexMatrix& rho)>;

/// One classical fourth-order Runge-Kutta step.
ComplexMatrix rk4_step(const Generator& rhs, const ComplexMatrix& rho, double dt);

/// Fixed-step RK4 from `rho` (updated in place) up to t_max. After every step
/// the state is re-hermitized and divided by its trace; the pre-correction
/// drift, hermiticity residue and (at samples) the smallest eigenvalue are
/// checked against the tolerances and raise InvariantViolation when exceeded.
InvariantSummary integrate(const Generator& rhs, ComplexMatrix& rho, const IntegrationSettings& settings,
                           const SampleObserver& observer);

/// Declares convergence once ||rhs(rho)||_F < tol holds for 10 consecutive samples.
class SteadyDetector {
 public:
  SteadyDetector(Generator rhs, double tol) : rhs_(std::move(rhs)), tol_(tol) {}
  bool update(const ComplexMatrix& rho);
  bool converged() const;
  double residual() const { return residual_; }

 private:
  Generator rhs_;
  double tol_;
  int consecutive_ = 0;
  double residual_ = std::numeric_limits<double>::infinity();
};

/// Graph description as it appears in run configurations.
struct GraphSpec {
  std::string family = "cylinder";
  int rows = 5;
  int cols = 5;
  int n = 0;
  std::vector<int> defects;
};

/// Built graph plus the original -> current index map (identity when no defects).
struct ResolvedGraph {
  NetworkGraph graph;
  std::vector<int> new_index;

  int node(int original) const;
};

ResolvedGraph resolve_graph(const GraphSpec& spec);

struct SimConfig {
  GraphSpec graph;
  NoiseChannel channel = NoiseChannel::qsw(0.5, 0.0);
  int initial_node = 0;  ///< index in the original (pre-defect) numbering
  IntegrationSettings integration;
  bool stop_when_steady = false;  ///< end the trajectory early once steady

  void validate() const;
};

/// Integrates from the basis projector at `initial_node`. When `reference` is
/// given, the trace distance to it is recorded at each sample.
Trajectory evolve(const SimConfig& config, const std::optional<DensityState>& reference = std::nullopt);

struct SteadyStateResult {
  DensityState state;
  double time = 0.0;      ///< time at which convergence was declared
  double residual = 0.0;  ///< ||d rho/dt||_F at that time
  InvariantSummary invariants;
};

/// Evolves again from the initial node up to t_end, recording the trace
/// distance to `target`, and fits a stretched exponential to that decay.
KwwFit fit_relaxation(const SimConfig& config, const DensityState& target, double t_end);

/// Integrates until ||d rho/dt||_F < tol.steady for 10 consecutive samples.
/// Throws NonConvergence if t_max is reached first.
SteadyStateResult steady_state(const SimConfig& config);

/// Generic form shared with the spin sector.
SteadyStateResult steady_state(const Generator& rhs, const ComplexMatrix& initial,
                               const IntegrationSettings& settings);

}  // namespace postwalk
