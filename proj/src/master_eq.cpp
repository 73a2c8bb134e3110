#include "postwalk/master_eq.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#if defined(__SSE__) || defined(_M_X64)
#include <xmmintrin.h>
#define POSTWALK_HAS_MXCSR 1
#endif

namespace postwalk {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr int kSteadySamples = 10;

void check_square(const ComplexMatrix& rho, Eigen::Index dim, const char* what) {
  if (rho.rows() != dim || rho.cols() != dim) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch (rho " << rho.rows() << "x" << rho.cols() << ", expected " << dim << ")";
    throw std::invalid_argument(msg.str());
  }
}

// Decaying coherences underflow into subnormals, which are orders of magnitude
// slower on x86; flush them to zero for the duration of an integration.
class FlushDenormals {
 public:
#ifdef POSTWALK_HAS_MXCSR
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned int saved_;
#endif
};

[[noreturn]] void raise(const std::string& quantity, double magnitude, long step, double t) {
  std::ostringstream msg;
  msg << "invariant '" << quantity << "' violated at step " << step << " (t = " << t << "): magnitude " << magnitude;
  throw InvariantViolation(quantity, magnitude, step, msg.str());
}

}  // namespace

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::HakenStrobl: return "haken_strobl";
    case ChannelKind::Qsw: return "qsw";
    case ChannelKind::SpinHop: return "spin_hop";
  }
  return "?";
}

ChannelKind parse_channel_kind(const std::string& name) {
  if (name == "haken_strobl" || name == "hs") return ChannelKind::HakenStrobl;
  if (name == "qsw") return ChannelKind::Qsw;
  if (name == "spin_hop") return ChannelKind::SpinHop;
  throw std::invalid_argument("unknown channel kind '" + name + "'");
}

NoiseChannel NoiseChannel::haken_strobl(double gamma, double eta) {
  NoiseChannel c{ChannelKind::HakenStrobl, eta, gamma, 0.0};
  c.validate();
  return c;
}

NoiseChannel NoiseChannel::qsw(double p, double eta) {
  NoiseChannel c{ChannelKind::Qsw, eta, 0.0, p};
  c.validate();
  return c;
}

NoiseChannel NoiseChannel::spin_hop(double gamma, double eta) {
  NoiseChannel c{ChannelKind::SpinHop, eta, gamma, 0.0};
  c.validate();
  return c;
}

void NoiseChannel::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be finite and >= 0");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
}

JumpOperatorSet haken_strobl_jumps(int n, double gamma) {
  JumpOperatorSet set;
  set.rate = gamma;
  for (int k = 0; k < n; ++k) {
    ComplexMatrix op = ComplexMatrix::Zero(n, n);
    op(k, k) = 1.0;
    set.operators.push_back(std::move(op));
  }
  return set;
}

JumpOperatorSet qsw_jumps(const Eigen::MatrixXd& hamiltonian, double p) {
  const auto n = hamiltonian.rows();
  JumpOperatorSet set;
  set.rate = p;
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (hamiltonian(k, j) == 0.0) continue;
      ComplexMatrix op = ComplexMatrix::Zero(n, n);
      op(k, j) = hamiltonian(k, j);
      set.operators.push_back(std::move(op));
    }
  }
  return set;
}

ComplexMatrix nlme_rhs_generic(const ComplexMatrix& rho, const ComplexMatrix& hamiltonian,
                               const JumpOperatorSet& jumps, double eta, double coherent_weight) {
  const auto n = hamiltonian.rows();
  check_square(rho, n, "nlme_rhs_generic");
  ComplexMatrix out = -kI * coherent_weight * (hamiltonian * rho - rho * hamiltonian);
  ComplexMatrix dissipator = ComplexMatrix::Zero(n, n);
  for (const auto& op : jumps.operators) {
    check_square(op, n, "nlme_rhs_generic (jump operator)");
    const ComplexMatrix pdp = op.adjoint() * op;
    dissipator -= 0.5 * (pdp * rho + rho * pdp);
    dissipator += (1.0 - eta) * op * rho * op.adjoint();
    dissipator += eta * (pdp * rho).trace() * rho;
  }
  out += jumps.rate * dissipator;
  return out;
}

ComplexMatrix qsw_rhs_closed_form(const ComplexMatrix& rho, const NetworkGraph& g, double p, double eta) {
  return QswGenerator(g, p, eta)(rho);
}

ComplexMatrix hs_rhs_closed_form(const ComplexMatrix& rho, const Eigen::MatrixXd& hamiltonian, double gamma,
                                 double eta) {
  check_square(rho, hamiltonian.rows(), "hs_rhs_closed_form");
  const ComplexMatrix h = hamiltonian.cast<Complex>();
  ComplexMatrix out = -kI * (h * rho - rho * h);
  ComplexMatrix off_diagonal = rho;
  off_diagonal.diagonal().setZero();
  out -= gamma * (1.0 - eta) * off_diagonal;
  return out;
}

QswGenerator::QswGenerator(const NetworkGraph& g, double p, double eta)
    : hamiltonian_(laplacian(g).cast<Complex>()),
      adjacency_(g.adjacency().cast<double>()),
      degree_sq_(g.degrees().cast<double>().array().square()),
      outflow_(degree_sq_ + g.degrees().cast<double>()),
      p_(p),
      eta_(eta) {}

ComplexMatrix QswGenerator::operator()(const ComplexMatrix& rho) const {
  const auto n = hamiltonian_.rows();
  check_square(rho, n, "qsw_rhs_closed_form");
  const Eigen::VectorXd pops = rho.diagonal().real();

  ComplexMatrix out = -kI * (1.0 - p_) * (hamiltonian_ * rho - rho * hamiltonian_);
  // -(p/2) {diag(D^2 + D), rho}
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) out(r, c) -= 0.5 * p_ * (outflow_(r) + outflow_(c)) * rho(r, c);
  // p (1 - eta) sum_k (D_k^2 rho_kk + sum_j A_kj rho_jj) |k><k|
  const Eigen::VectorXd gain = degree_sq_.cwiseProduct(pops) + adjacency_ * pops;
  out.diagonal() += (p_ * (1.0 - eta_) * gain).cast<Complex>();
  // p eta (sum_j (D_j^2 + D_j) rho_jj) rho
  out += p_ * eta_ * outflow_.dot(pops) * rho;
  return out;
}

Generator make_walk_generator(const NetworkGraph& g, const NoiseChannel& channel) {
  channel.validate();
  switch (channel.kind) {
    case ChannelKind::Qsw:
      return QswGenerator(g, channel.p, channel.eta);
    case ChannelKind::HakenStrobl: {
      const Eigen::MatrixXd h = laplacian(g);
      const double gamma = channel.gamma, eta = channel.eta;
      return [h, gamma, eta](const ComplexMatrix& rho) { return hs_rhs_closed_form(rho, h, gamma, eta); };
    }
    case ChannelKind::SpinHop:
      break;
  }
  throw std::invalid_argument("spin_hop channel acts on spin systems, not node walks");
}

void IntegrationSettings::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be > 0");
  if (!(sample_interval >= dt)) throw std::invalid_argument("sample_interval must be >= dt");
  if (!(tol.steady > 0.0)) throw std::invalid_argument("steady-state tolerance must be > 0");
}

ComplexMatrix rk4_step(const Generator& rhs, const ComplexMatrix& rho, double dt) {
  const ComplexMatrix k1 = rhs(rho);
  const ComplexMatrix k2 = rhs(rho + (0.5 * dt) * k1);
  const ComplexMatrix k3 = rhs(rho + (0.5 * dt) * k2);
  const ComplexMatrix k4 = rhs(rho + dt * k3);
  return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

InvariantSummary integrate(const Generator& rhs, ComplexMatrix& rho, const IntegrationSettings& settings,
                           const SampleObserver& observer) {
  settings.validate();
  const FlushDenormals ftz;
  const Tolerances& tol = settings.tol;
  const long steps_per_sample = std::max(1L, std::lround(settings.sample_interval / settings.dt));
  const long total_steps = std::lround(std::ceil(settings.t_max / settings.dt - 1e-9));

  InvariantSummary summary;
  const auto check_sample = [&](long step, double t) {
    const StateDiagnostics d = diagnose(rho);
    if (!d.finite) raise("finite", d.hermiticity, step, t);
    summary.min_eigenvalue = std::min(summary.min_eigenvalue, d.min_eigenvalue);
    if (d.min_eigenvalue < -tol.positivity) raise("positivity", d.min_eigenvalue, step, t);
  };

  check_sample(0, 0.0);
  if (!observer(0.0, rho)) return summary;

  for (long step = 1; step <= total_steps; ++step) {
    const double t = static_cast<double>(step) * settings.dt;
    ComplexMatrix next = rk4_step(rhs, rho, settings.dt);
    if (!next.allFinite()) raise("finite", std::numeric_limits<double>::infinity(), step, t);

    const double hermiticity = (next - next.adjoint()).cwiseAbs().maxCoeff();
    summary.max_hermiticity = std::max(summary.max_hermiticity, hermiticity);
    if (hermiticity > tol.hermiticity) raise("hermiticity", hermiticity, step, t);
    rho = hermitian_part(next);

    const double trace = rho.trace().real();
    const double drift = std::abs(trace - 1.0);
    summary.max_trace_drift = std::max(summary.max_trace_drift, drift);
    if (drift > tol.trace) raise("trace", drift, step, t);
    rho /= trace;

    summary.steps = step;
    summary.t_end = t;
    if (step % steps_per_sample == 0) {
      check_sample(step, t);
      if (!observer(t, rho)) break;
    }
  }
  return summary;
}

int ResolvedGraph::node(int original) const {
  if (original < 0 || original >= static_cast<int>(new_index.size())) {
    throw std::out_of_range("node " + std::to_string(original) + " not in graph");
  }
  const int mapped = new_index[static_cast<std::size_t>(original)];
  if (mapped < 0) throw std::invalid_argument("node " + std::to_string(original) + " was removed as a defect");
  return mapped;
}

ResolvedGraph resolve_graph(const GraphSpec& spec) {
  NetworkGraph base = is_grid_family(spec.family)
                          ? build_grid_topology(spec.rows, spec.cols, parse_grid_kind(spec.family))
                          : build_simple_topology(spec.n, parse_simple_kind(spec.family));
  if (spec.defects.empty()) {
    std::vector<int> identity(static_cast<std::size_t>(base.size()));
    for (int k = 0; k < base.size(); ++k) identity[static_cast<std::size_t>(k)] = k;
    return {std::move(base), std::move(identity)};
  }
  NodeRemoval removal = remove_nodes(base, spec.defects);
  return {std::move(removal.graph), std::move(removal.new_index)};
}

void SimConfig::validate() const {
  channel.validate();
  if (channel.kind == ChannelKind::SpinHop) throw std::invalid_argument("spin_hop channel needs a spin run");
  integration.validate();
  const ResolvedGraph g = resolve_graph(graph);
  (void)g.node(initial_node);
}

Trajectory evolve(const SimConfig& config, const std::optional<DensityState>& reference) {
  config.validate();
  const ResolvedGraph resolved = resolve_graph(config.graph);
  const int n = resolved.graph.size();
  if (reference && reference->dim() != n) throw std::invalid_argument("reference state dimension mismatch");

  const Generator rhs = make_walk_generator(resolved.graph, config.channel);
  ComplexMatrix rho = DensityState::basis_projector(n, resolved.node(config.initial_node)).matrix();

  Trajectory traj;
  SteadyDetector detector(rhs, config.integration.tol.steady);
  traj.invariants = integrate(rhs, rho, config.integration, [&](double t, const ComplexMatrix& state) {
    traj.times.push_back(t);
    traj.populations.push_back(state.diagonal().real());
    traj.coherence_l1.push_back(l1_coherence(state));
    if (reference) traj.trace_distance.push_back(trace_distance(state, reference->matrix()));
    return !(config.stop_when_steady && detector.update(state));
  });
  traj.final_state.emplace(rho, config.integration.tol);
  return traj;
}

bool SteadyDetector::update(const ComplexMatrix& rho) {
  residual_ = rhs_(rho).norm();
  consecutive_ = residual_ < tol_ ? consecutive_ + 1 : 0;
  return converged();
}

bool SteadyDetector::converged() const { return consecutive_ >= kSteadySamples; }

SteadyStateResult steady_state(const Generator& rhs, const ComplexMatrix& initial,
                               const IntegrationSettings& settings) {
  ComplexMatrix rho = initial;
  SteadyDetector detector(rhs, settings.tol.steady);
  double t_last = 0.0;
  const InvariantSummary summary = integrate(rhs, rho, settings, [&](double t, const ComplexMatrix& state) {
    t_last = t;
    return !detector.update(state);
  });
  if (!detector.converged()) {
    std::ostringstream msg;
    msg << "steady state not reached by t_max = " << settings.t_max << " (residual " << detector.residual()
        << ", tolerance " << settings.tol.steady << ")";
    throw NonConvergence(detector.residual(), t_last, msg.str());
  }
  return {DensityState(rho, settings.tol), t_last, detector.residual(), summary};
}

KwwFit fit_relaxation(const SimConfig& config, const DensityState& target, double t_end) {
  SimConfig run = config;
  run.integration.t_max = t_end;
  run.stop_when_steady = false;
  const Trajectory traj = evolve(run, target);
  return fit_stretched_exponential(traj.times, traj.trace_distance);
}

SteadyStateResult steady_state(const SimConfig& config) {
  config.validate();
  if (!(config.channel.rate() > 0.0)) throw std::invalid_argument("steady_state needs dissipation (gamma > 0 or p > 0)");
  const ResolvedGraph resolved = resolve_graph(config.graph);
  const Generator rhs = make_walk_generator(resolved.graph, config.channel);
  const ComplexMatrix initial =
      DensityState::basis_projector(resolved.graph.size(), resolved.node(config.initial_node)).matrix();
  return steady_state(rhs, initial, config.integration);
}

}  // namespace postwalk
