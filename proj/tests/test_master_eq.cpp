#include <doctest.h>

#include <cmath>

#include "postwalk/master_eq.hpp"
#include "support.hpp"

using namespace postwalk;
using testing::max_abs;

namespace {

constexpr Complex kI{0.0, 1.0};

// connected random graph: a spanning path plus random chords
NetworkGraph random_graph(int n, std::mt19937& rng) {
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) a(order[k], order[k + 1]) = a(order[k + 1], order[k]) = 1;
  std::bernoulli_distribution coin(0.4);
  for (int r = 0; r < n; ++r)
    for (int c = r + 1; c < n; ++c)
      if (coin(rng)) a(r, c) = a(c, r) = 1;
  return NetworkGraph::from_adjacency(a);
}

// plain Lindblad dissipator written out term by term
ComplexMatrix linear_lindblad(const ComplexMatrix& rho, const ComplexMatrix& h, const JumpOperatorSet& jumps,
                              double weight) {
  ComplexMatrix out = -kI * weight * (h * rho - rho * h);
  for (const ComplexMatrix& l : jumps.operators) {
    const ComplexMatrix ll = l.adjoint() * l;
    out += jumps.rate * (l * rho * l.adjoint() - 0.5 * (ll * rho + rho * ll));
  }
  return out;
}

ComplexMatrix as_complex(const Eigen::MatrixXd& m) { return m.cast<Complex>(); }

}  // namespace

TEST_CASE("qsw and haken-strobl closed forms agree with the generic generator") {
  std::mt19937 rng(20240611);
  double worst_qsw = 0.0, worst_hs = 0.0;
  const NetworkGraph cylinder = build_grid_topology(3, 4, GridKind::Cylinder);
  for (int trial = 0; trial < 100; ++trial) {
    const NetworkGraph g = trial % 4 == 3 ? cylinder : random_graph(4 + trial % 3, rng);
    const int n = g.size();
    const Eigen::MatrixXd h = laplacian(g);
    const ComplexMatrix rho = testing::random_density(n, rng);
    const double p = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    const double gamma = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
    for (double eta : {0.0, 0.3, 0.7, 1.0}) {
      const ComplexMatrix generic = nlme_rhs_generic(rho, as_complex(h), qsw_jumps(h, p), eta, 1.0 - p);
      worst_qsw = std::max(worst_qsw, max_abs(generic - qsw_rhs_closed_form(rho, g, p, eta)));
      worst_qsw = std::max(worst_qsw, max_abs(generic - QswGenerator(g, p, eta)(rho)));
      const ComplexMatrix hs = nlme_rhs_generic(rho, as_complex(h), haken_strobl_jumps(n, gamma), eta, 1.0);
      worst_hs = std::max(worst_hs, max_abs(hs - hs_rhs_closed_form(rho, h, gamma, eta)));
    }
  }
  CHECK(worst_qsw < 1e-12);
  CHECK(worst_hs < 1e-12);
}

TEST_CASE("generator output is traceless and hermitian") {
  std::mt19937 rng(7);
  const NetworkGraph g = build_grid_topology(3, 3, GridKind::Moebius);
  const Eigen::MatrixXd h = laplacian(g);
  for (int trial = 0; trial < 100; ++trial) {
    const ComplexMatrix rho = testing::random_density(9, rng);
    for (double eta : {0.0, 0.3, 0.7, 1.0}) {
      for (const ComplexMatrix& d :
           {qsw_rhs_closed_form(rho, g, 0.6, eta), hs_rhs_closed_form(rho, h, 0.8, eta),
            nlme_rhs_generic(rho, as_complex(h), haken_strobl_jumps(9, 0.8), eta, 1.0)}) {
        CHECK(std::abs(d.trace()) < 1e-12);
        CHECK(max_abs(d - d.adjoint()) < 1e-12);
      }
    }
  }
}

TEST_CASE("rhs is affine in eta") {
  std::mt19937 rng(99);
  const NetworkGraph g = random_graph(5, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix rho = testing::random_density(5, rng);
    const ComplexMatrix r0 = qsw_rhs_closed_form(rho, g, 0.4, 0.0);
    const ComplexMatrix r1 = qsw_rhs_closed_form(rho, g, 0.4, 1.0);
    for (double eta : {0.25, 0.5, 0.9}) CHECK(max_abs(qsw_rhs_closed_form(rho, g, 0.4, eta) - (r0 + eta * (r1 - r0))) < 1e-12);
  }
}

TEST_CASE("eta = 0 reduces to the linear Lindblad equation") {
  std::mt19937 rng(3);
  const NetworkGraph g = random_graph(5, rng);
  const Eigen::MatrixXd h = laplacian(g);
  const ComplexMatrix rho = testing::random_density(5, rng);
  const JumpOperatorSet jumps = qsw_jumps(h, 0.35);
  CHECK(max_abs(nlme_rhs_generic(rho, as_complex(h), jumps, 0.0, 0.65) - linear_lindblad(rho, as_complex(h), jumps, 0.65)) <
        1e-12);
}

TEST_CASE("jump operator sets") {
  const NetworkGraph g = build_simple_topology(4, SimpleKind::Star);
  const Eigen::MatrixXd h = laplacian(g);
  const JumpOperatorSet qsw = qsw_jumps(h, 0.5);
  CHECK(qsw.operators.size() == 4 + 2 * 3);
  CHECK(qsw.rate == 0.5);
  ComplexMatrix sum = ComplexMatrix::Zero(4, 4);
  for (const ComplexMatrix& l : qsw.operators) sum += l.adjoint() * l;
  // sum_k |H_kj|^2 = D_j^2 + D_j
  for (int j = 0; j < 4; ++j) CHECK(sum(j, j).real() == doctest::Approx(g.degree(j) * g.degree(j) + g.degree(j)));
  CHECK(haken_strobl_jumps(4, 1.0).operators.size() == 4);
}

TEST_CASE("closed-form special cases") {
  std::mt19937 rng(11);
  const NetworkGraph torus = build_grid_topology(4, 4, GridKind::Torus);
  const NetworkGraph cylinder = build_grid_topology(5, 5, GridKind::Cylinder);
  const ComplexMatrix mixed16 = DensityState::maximally_mixed(16).matrix();
  const ComplexMatrix mixed25 = DensityState::maximally_mixed(25).matrix();

  CHECK(max_abs(qsw_rhs_closed_form(mixed16, torus, 0.5, 0.8)) < 1e-15);
  const ComplexMatrix d = qsw_rhs_closed_form(mixed25, cylinder, 0.5, 0.5);
  CHECK(d.diagonal().cwiseAbs().maxCoeff() > 1e-3);
  CHECK(max_abs(qsw_rhs_closed_form(mixed25, cylinder, 0.5, 0.0)) < 1e-15);

  const Eigen::MatrixXd h = laplacian(cylinder);
  const ComplexMatrix rho = testing::random_density(25, rng);
  const ComplexMatrix commutator = -kI * (as_complex(h) * rho - rho * as_complex(h));
  CHECK(max_abs(hs_rhs_closed_form(rho, h, 0.7, 1.0) - commutator) < 1e-12);
  CHECK(max_abs(hs_rhs_closed_form(mixed25, h, 0.7, 0.3)) < 1e-15);

  ComplexMatrix diag = ComplexMatrix::Zero(25, 25);
  diag.diagonal() = rho.diagonal();
  const ComplexMatrix generic = nlme_rhs_generic(diag, as_complex(h), haken_strobl_jumps(25, 0.7), 0.4, 1.0);
  CHECK(max_abs(generic - (-kI * (as_complex(h) * diag - diag * as_complex(h)))) < 1e-12);
}

TEST_CASE("dimension mismatch is rejected") {
  const NetworkGraph g = build_simple_topology(4, SimpleKind::Line);
  const ComplexMatrix rho = DensityState::maximally_mixed(3).matrix();
  CHECK_THROWS_AS(qsw_rhs_closed_form(rho, g, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(hs_rhs_closed_form(rho, laplacian(g), 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(nlme_rhs_generic(rho, as_complex(laplacian(g)), haken_strobl_jumps(4, 1.0), 0.5, 1.0),
                  std::invalid_argument);
}

TEST_CASE("noise channel validation") {
  CHECK_THROWS_AS(NoiseChannel::qsw(1.2, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(NoiseChannel::qsw(0.5, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(NoiseChannel::haken_strobl(-1.0, 0.5), std::invalid_argument);
  CHECK(NoiseChannel::qsw(0.3, 0.2).coherent_weight() == doctest::Approx(0.7));
  CHECK(parse_channel_kind("hs") == ChannelKind::HakenStrobl);
  CHECK_THROWS_AS(parse_channel_kind("dephasing"), std::invalid_argument);
}

TEST_CASE("rk4 is fourth order") {
  const NetworkGraph g = build_simple_topology(5, SimpleKind::Star);
  const QswGenerator rhs(g, 0.4, 0.6);
  const ComplexMatrix start = DensityState::basis_projector(5, 1).matrix();
  const auto run = [&](double dt) {
    ComplexMatrix rho = start;
    const int steps = static_cast<int>(std::lround(1.0 / dt));
    for (int s = 0; s < steps; ++s) rho = rk4_step(rhs, rho, dt);
    return rho;
  };
  const double dt = 0.1;
  const ComplexMatrix reference = run(dt / 8);
  const double e1 = (run(dt) - reference).norm();
  const double e2 = (run(dt / 2) - reference).norm();
  const double factor = e1 / e2;
  MESSAGE("rk4 error ratio " << factor);
  CHECK(factor >= 12.0);
  CHECK(factor <= 20.0);
}

TEST_CASE("unitary limit keeps the spectrum") {
  SimConfig config;
  config.graph = GraphSpec{"moebius", 4, 4, 0, {}};
  config.channel = NoiseChannel::qsw(0.0, 0.8);
  config.initial_node = 5;
  config.integration.t_max = 20.0;
  config.integration.dt = 0.001;
  const Trajectory traj = evolve(config);
  const ComplexMatrix& rho = traj.final_state->matrix();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho);
  CHECK(std::abs(rho.trace() - 1.0) < 1e-8);
  CHECK(es.eigenvalues()(15) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(es.eigenvalues().head(15).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(traj.invariants.max_trace_drift < 1e-8);
}

TEST_CASE("trajectory sampling") {
  SimConfig config;
  config.graph = GraphSpec{"torus", 3, 3, 0, {}};
  config.channel = NoiseChannel::haken_strobl(1.0, 0.4);
  config.initial_node = 4;
  config.integration.t_max = 2.0;
  config.integration.sample_interval = 0.5;
  const Trajectory traj = evolve(config);
  REQUIRE(traj.times.size() == 5);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(2.0));
  CHECK(traj.populations.front()(4) == 1.0);
  for (const RealVector& p : traj.populations) {
    CHECK(std::abs(p.sum() - 1.0) < 1e-8);
    CHECK(p.minCoeff() > -1e-8);
  }
  CHECK(traj.trace_distance.empty());
}

TEST_CASE("invariant violations abort the integration") {
  ComplexMatrix rho = DensityState::basis_projector(3, 0).matrix();
  IntegrationSettings settings;
  settings.t_max = 1.0;
  const Generator grows = [](const ComplexMatrix& r) -> ComplexMatrix { return r; };
  try {
    integrate(grows, rho, settings, [](double, const ComplexMatrix&) { return true; });
    FAIL("expected an invariant violation");
  } catch (const InvariantViolation& e) {
    CHECK(e.quantity() == "trace");
    CHECK(e.step() == 1);
  }

  rho = DensityState::basis_projector(3, 0).matrix();
  const Generator broken = [](const ComplexMatrix& r) -> ComplexMatrix {
    return ComplexMatrix::Constant(r.rows(), r.cols(), std::nan(""));
  };
  CHECK_THROWS_AS(integrate(broken, rho, settings, [](double, const ComplexMatrix&) { return true; }),
                  InvariantViolation);

  rho = DensityState::basis_projector(3, 0).matrix();
  const Generator skew = [](const ComplexMatrix& r) -> ComplexMatrix {
    ComplexMatrix out = ComplexMatrix::Zero(r.rows(), r.cols());
    out(0, 1) = 1.0;
    return out;
  };
  try {
    integrate(skew, rho, settings, [](double, const ComplexMatrix&) { return true; });
    FAIL("expected an invariant violation");
  } catch (const InvariantViolation& e) {
    CHECK(e.quantity() == "hermiticity");
  }
}

TEST_CASE("integration settings validation") {
  IntegrationSettings s;
  s.sample_interval = s.dt / 2;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = IntegrationSettings{};
  s.dt = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  SimConfig config;
  config.initial_node = 25;
  CHECK_THROWS(config.validate());
  config.initial_node = 0;
  config.graph.defects = {0};
  CHECK_THROWS(config.validate());
}

TEST_CASE("steady state detection") {
  SimConfig config;
  config.graph = GraphSpec{"cylinder", 5, 5, 0, {}};
  config.channel = NoiseChannel::qsw(0.5, 0.0);
  config.initial_node = 12;
  config.integration.t_max = 5.0;
  CHECK_THROWS_AS(steady_state(config), NonConvergence);

  config.integration.t_max = 500.0;
  const SteadyStateResult ss = steady_state(config);
  CHECK(ss.residual < 1e-9);
  const RealVector p = ss.state.populations();
  CHECK((p.array() - 1.0 / 25).abs().maxCoeff() < 1e-6);

  config.channel = NoiseChannel::qsw(0.0, 0.5);
  CHECK_THROWS_AS(steady_state(config), std::invalid_argument);
}

TEST_CASE("regular torus stays uniform under postselection") {
  SimConfig config;
  config.graph = GraphSpec{"torus", 5, 5, 0, {}};
  config.channel = NoiseChannel::qsw(0.5, 0.8);
  config.initial_node = 12;
  config.integration.t_max = 1000.0;
  const SteadyStateResult ss = steady_state(config);
  CHECK((ss.state.populations().array() - 1.0 / 25).abs().maxCoeff() < 1e-6);
}

TEST_CASE("haken-strobl steady state is maximally mixed") {
  SimConfig config;
  config.graph = GraphSpec{"cylinder", 5, 5, 0, {}};
  config.channel = NoiseChannel::haken_strobl(1.0, 0.4);
  config.initial_node = 12;
  config.integration.t_max = 1000.0;
  const SteadyStateResult ss = steady_state(config);
  CHECK(max_abs(ss.state.matrix() - DensityState::maximally_mixed(25).matrix()) < 1e-6);
}

TEST_CASE("star walk localizes on the leaves") {
  SimConfig config;
  config.graph = GraphSpec{"star", 5, 5, 6, {}};
  config.channel = NoiseChannel::qsw(0.5, 0.8);
  config.initial_node = 0;
  config.integration.t_max = 1000.0;
  const RealVector p = steady_state(config).state.populations();
  for (int k = 1; k < 6; ++k) CHECK(p(k) > p(0));
}

TEST_CASE("graph resolution keeps original labels") {
  const ResolvedGraph r = resolve_graph(GraphSpec{"torus", 5, 5, 0, {12}});
  CHECK(r.graph.size() == 24);
  CHECK(r.node(13) == 12);
  CHECK_THROWS(r.node(12));
  CHECK_THROWS(resolve_graph(GraphSpec{"hexagon", 5, 5, 0, {}}));
}
