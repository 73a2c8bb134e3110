#include "commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "postwalk/steady.hpp"

#ifndef POSTWALK_VERSION
#define POSTWALK_VERSION "0.0.0"
#endif

namespace postwalk::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kTimeUnit = "inverse hopping strength (J = 1)";

// Files are assembled in memory and written only once every run succeeded.
class OutputSet {
 public:
  explicit OutputSet(std::string root) : root_(std::move(root)) {}

  void add(const std::string& relative, std::string content) { files_.emplace_back(relative, std::move(content)); }

  std::vector<std::string> paths() const {
    std::vector<std::string> out;
    for (const auto& f : files_) out.push_back((fs::path(root_) / f.first).string());
    return out;
  }

  void commit() const {
    for (const auto& [relative, content] : files_) {
      const fs::path path = fs::path(root_) / relative;
      fs::create_directories(path.parent_path());
      std::ofstream out(path, std::ios::binary);
      out << content;
      if (!out) throw std::runtime_error("failed to write " + path.string());
    }
  }

 private:
  std::string root_;
  std::vector<std::pair<std::string, std::string>> files_;
};

// Runs fn(0..count-1) on a bounded pool; rethrows the first failure in index order.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(workers, 1)));
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string value_dir(const char* prefix, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%g", prefix, v);
  return buf;
}

std::string matrix_json(const ComplexMatrix& m) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row_re = Json::array(), row_im = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row_re.push_back(m(r, c).real());
      row_im.push_back(m(r, c).imag());
    }
    re.push_back(std::move(row_re));
    im.push_back(std::move(row_im));
  }
  return Json{{"re", re}, {"im", im}}.dump() + "\n";
}

Json invariants_json(const InvariantSummary& s) {
  return Json{{"max_trace_drift", s.max_trace_drift},
              {"max_hermiticity", s.max_hermiticity},
              {"min_eigenvalue", s.min_eigenvalue},
              {"steps", s.steps},
              {"t_end", s.t_end}};
}

// original index of every surviving node, in current order
std::vector<int> node_labels(const ResolvedGraph& g) {
  std::vector<int> labels(static_cast<std::size_t>(g.graph.size()), -1);
  for (std::size_t original = 0; original < g.new_index.size(); ++original) {
    if (g.new_index[original] >= 0) labels[static_cast<std::size_t>(g.new_index[original])] = static_cast<int>(original);
  }
  return labels;
}

std::string edge_list(const NetworkGraph& g) {
  std::ostringstream out;
  write_edge_list_csv(out, g);
  return out.str();
}

Json base_manifest(const char* command, const CommandContext& ctx) {
  return Json{{"command", command},
              {"engine_version", POSTWALK_VERSION},
              {"config_path", fs::absolute(ctx.config_path).string()},
              {"time_unit", kTimeUnit},
              {"workers", ctx.workers}};
}

void finish(OutputSet& files, Json manifest, std::chrono::steady_clock::time_point start) {
  std::vector<std::string> outputs = files.paths();
  outputs.push_back((fs::path(manifest.value("out_dir", std::string{})) / "manifest.json").string());
  manifest["outputs"] = outputs;
  manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  files.add("manifest.json", manifest.dump(2) + "\n");
  files.commit();
}

std::string trajectory_csv(const Trajectory& traj, const std::vector<int>& labels) {
  std::string out = "t";
  for (int label : labels) out += ",p_" + std::to_string(label);
  out += ",coherence_l1";
  const bool with_distance = !traj.trace_distance.empty();
  if (with_distance) out += ",trace_distance";
  out += "\n";
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    out += format_double(traj.times[s]);
    for (Eigen::Index k = 0; k < traj.populations[s].size(); ++k) out += "," + format_double(traj.populations[s](k));
    out += "," + format_double(traj.coherence_l1[s]);
    if (with_distance) out += "," + format_double(traj.trace_distance[s]);
    out += "\n";
  }
  return out;
}

SimConfig with_eta(SimConfig c, double eta) {
  c.channel.eta = eta;
  return c;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("POSTWALK_WORKERS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 1024) {
      throw ConfigError(std::string("POSTWALK_WORKERS must be a positive integer, got '") + env + "'");
    }
    return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_simulate(const CommandContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const WalkPlan plan = parse_walk_plan(load_config(ctx.config_path), false);
  const ResolvedGraph resolved = resolve_graph(plan.base.graph);
  const std::vector<int> labels = node_labels(resolved);

  struct Run {
    Trajectory traj;
    std::optional<SteadyStateResult> reference;
  };
  std::vector<Run> runs(plan.etas.size());
  parallel_for(plan.etas.size(), ctx.workers, [&](std::size_t i) {
    const SimConfig config = with_eta(plan.base, plan.etas[i]);
    if (plan.trace_distance) {
      SimConfig search = config;
      search.integration.t_max = plan.steady_t_max;
      search.stop_when_steady = false;
      runs[i].reference = steady_state(search);
      runs[i].traj = evolve(config, runs[i].reference->state);
    } else {
      runs[i].traj = evolve(config);
    }
  });

  OutputSet files(ctx.out_dir);
  Json manifest = base_manifest("simulate", ctx);
  manifest["out_dir"] = ctx.out_dir;
  manifest["node_labels"] = labels;
  Json run_entries = Json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string dir = plan.eta_list ? value_dir("eta", plan.etas[i]) + "/" : "";
    files.add(dir + "trajectory.csv", trajectory_csv(runs[i].traj, labels));
    files.add(dir + "final_state.json", matrix_json(runs[i].traj.final_state->matrix()));
    Json entry{{"eta", plan.etas[i]},
               {"config", to_json(with_eta(plan.base, plan.etas[i]))},
               {"trajectory", dir + "trajectory.csv"},
               {"final_state", dir + "final_state.json"},
               {"invariants", invariants_json(runs[i].traj.invariants)}};
    if (runs[i].reference) {
      entry["steady_state_time"] = runs[i].reference->time;
      entry["steady_state_residual"] = runs[i].reference->residual;
    }
    run_entries.push_back(std::move(entry));
  }
  if (plan.edge_list) files.add("edges.csv", edge_list(resolved.graph));
  manifest["runs"] = run_entries;
  finish(files, manifest, start);
  return kSuccess;
}

int cmd_sweep(const CommandContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const WalkPlan plan = parse_walk_plan(load_config(ctx.config_path), true);
  const SweepPlan& sweep = *plan.sweep;
  const ResolvedGraph resolved = resolve_graph(plan.base.graph);
  const std::vector<int> labels = node_labels(resolved);
  const std::size_t n = labels.size();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  struct Row {
    RealVector populations;
    double coherence = nan, tau = nan, beta = nan, k = nan, r2 = nan, t_end = nan;
    std::string status = "ok";
    std::string message;
  };
  std::vector<Row> rows(sweep.values.size());

  parallel_for(sweep.values.size(), ctx.workers, [&](std::size_t i) {
    SimConfig config = plan.base;
    config.stop_when_steady = false;
    if (sweep.axis == SweepAxis::Eta) {
      config.channel.eta = sweep.values[i];
    } else {
      config.channel.p = sweep.values[i];
    }
    Row& row = rows[i];
    row.populations = RealVector::Constant(static_cast<Eigen::Index>(n), nan);
    try {
      DensityState target = DensityState::maximally_mixed(static_cast<int>(n));
      if (sweep.observe_at) {
        config.integration.t_max = *sweep.observe_at;
        target = *evolve(config).final_state;
        row.t_end = *sweep.observe_at;
      } else {
        const SteadyStateResult ss = steady_state(config);
        target = ss.state;
        row.t_end = ss.time;
      }
      row.populations = target.populations();
      row.coherence = l1_coherence(target.matrix());

      try {
        const KwwFit fit = fit_relaxation(config, target, row.t_end);
        row.tau = fit.tau;
        row.beta = fit.beta;
        row.k = fit.k;
        row.r2 = fit.r2;
        if (!fit.reliable) row.status = "fit_unreliable";
      } catch (const std::exception& e) {
        row.status = "fit_failed";
        row.message = e.what();
      }
    } catch (const NonConvergence& e) {
      row.status = "non_convergence";
      row.message = e.what();
    } catch (const InvariantViolation& e) {
      row.status = "invariant_violation";
      row.message = e.what();
    }
  });

  std::string csv = "value";
  for (int label : labels) csv += ",p_node" + std::to_string(label);
  csv += ",coherence_l1,tau,beta,k,r2,status\n";
  Json row_entries = Json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    csv += format_double(sweep.values[i]);
    for (Eigen::Index k = 0; k < row.populations.size(); ++k) csv += "," + format_double(row.populations(k));
    for (double x : {row.coherence, row.tau, row.beta, row.k, row.r2}) csv += "," + format_double(x);
    csv += "," + row.status + "\n";
    Json entry{{"value", sweep.values[i]}, {"status", row.status}, {"t_end", row.t_end}};
    if (!row.message.empty()) entry["message"] = row.message;
    row_entries.push_back(std::move(entry));
  }

  OutputSet files(ctx.out_dir);
  files.add("sweep.csv", csv);
  if (plan.edge_list) files.add("edges.csv", edge_list(resolved.graph));
  Json manifest = base_manifest("sweep", ctx);
  manifest["out_dir"] = ctx.out_dir;
  manifest["config"] = to_json(plan.base);
  manifest["config"]["channel"].erase(sweep.axis == SweepAxis::Eta ? "eta" : "p");
  manifest["sweep"] = {{"axis", sweep.axis == SweepAxis::Eta ? "eta" : "p"}, {"values", sweep.values}};
  if (sweep.observe_at) manifest["sweep"]["observe_at"] = *sweep.observe_at;
  manifest["node_labels"] = labels;
  manifest["rows"] = row_entries;
  finish(files, manifest, start);
  return kSuccess;
}

int cmd_verify(const CommandContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const WalkPlan plan = parse_walk_plan(load_config(ctx.config_path), false);
  if (!(plan.base.channel.rate() > 0.0)) {
    throw ConfigError(plan.base.channel.kind == ChannelKind::Qsw
                          ? "verify needs p > 0: the steady-state condition presupposes decoherence"
                          : "verify needs gamma > 0");
  }
  const ResolvedGraph resolved = resolve_graph(plan.base.graph);
  const int n = resolved.graph.size();

  std::vector<Json> reports(plan.etas.size());
  std::vector<double> worst(plan.etas.size(), 0.0);
  parallel_for(plan.etas.size(), ctx.workers, [&](std::size_t i) {
    const SimConfig config = with_eta(plan.base, plan.etas[i]);
    const SteadyStateResult ss = steady_state(config);
    Json report{{"channel", to_string(config.channel.kind)}, {"eta", config.channel.eta}};
    if (config.channel.kind == ChannelKind::Qsw) {
      report["p"] = config.channel.p;
      const ConstraintReport r = constraint_residual(ss.state, resolved.graph, config.channel.p, config.channel.eta);
      report["predicted"] = r.predicted;
      report["actual"] = r.actual;
      report["residual"] = r.residual;
      report["max_residual"] = r.max_residual;
      report["uniform_ok"] = r.uniform_ok;
      worst[i] = r.max_residual;
    } else {
      report["gamma"] = config.channel.gamma;
      const ComplexMatrix expected = hs_steady_state_prediction(n).matrix();
      const RealVector actual = ss.state.populations();
      const double deviation = (ss.state.matrix() - expected).cwiseAbs().maxCoeff();
      report["predicted"] = std::vector<double>(static_cast<std::size_t>(n), 1.0 / n);
      report["actual"] = std::vector<double>(actual.data(), actual.data() + actual.size());
      report["max_residual"] = deviation;
      report["uniform_ok"] = true;
      worst[i] = deviation;
    }
    report["coherence_l1"] = l1_coherence(ss.state.matrix());
    report["steady_state_time"] = ss.time;
    report["steady_state_residual"] = ss.residual;
    report["pass"] = worst[i] < kVerifyThreshold;
    reports[i] = std::move(report);
  });

  const double max_residual = *std::max_element(worst.begin(), worst.end());
  const bool pass = max_residual < kVerifyThreshold;
  Json out = plan.eta_list ? Json{{"runs", reports}, {"max_residual", max_residual}, {"pass", pass}} : reports.front();
  out["threshold"] = kVerifyThreshold;
  out["node_labels"] = node_labels(resolved);

  OutputSet files(ctx.out_dir);
  files.add("report.json", out.dump(2) + "\n");
  if (plan.edge_list) files.add("edges.csv", edge_list(resolved.graph));
  Json manifest = base_manifest("verify", ctx);
  manifest["out_dir"] = ctx.out_dir;
  manifest["config"] = to_json(plan.base);
  manifest["config"]["channel"]["eta"] = plan.etas;
  manifest["max_residual"] = max_residual;
  manifest["pass"] = pass;
  finish(files, manifest, start);
  return pass ? kSuccess : kInvariant;
}

int cmd_spin(const CommandContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const SpinPlan plan = parse_spin_plan(load_config(ctx.config_path));
  const SpinSystem sys = make_spin_system(plan.base);

  std::vector<SpinTrajectory> runs(plan.etas.size());
  parallel_for(plan.etas.size(), ctx.workers, [&](std::size_t i) {
    SpinRunConfig config = plan.base;
    config.eta = plan.etas[i];
    runs[i] = evolve_spin(config);
  });

  OutputSet files(ctx.out_dir);
  Json manifest = base_manifest("spin", ctx);
  manifest["out_dir"] = ctx.out_dir;
  Json run_entries = Json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const SpinTrajectory& traj = runs[i];
    const std::string dir = plan.eta_list ? value_dir("eta", plan.etas[i]) + "/" : "";
    std::string csv = "t";
    for (int s = 0; s < sys.n_spins(); ++s) csv += ",P_" + std::to_string(s);
    csv += ",C_max\n";
    double excitation_drift = 0.0;
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
      csv += format_double(traj.times[s]);
      for (Eigen::Index k = 0; k < traj.populations[s].size(); ++k) csv += "," + format_double(traj.populations[s](k));
      csv += "," + format_double(traj.max_concurrence[s]) + "\n";
      excitation_drift = std::max(excitation_drift, std::abs(traj.excitation_total[s] - 1.0));
    }
    files.add(dir + "spin_trajectory.csv", csv);
    files.add(dir + "final_state.json", matrix_json(traj.final_state->matrix()));

    SpinRunConfig config = plan.base;
    config.eta = plan.etas[i];
    Json entry{{"eta", plan.etas[i]},
               {"config", to_json(config)},
               {"trajectory", dir + "spin_trajectory.csv"},
               {"final_state", dir + "final_state.json"},
               {"max_excitation_drift", excitation_drift},
               {"invariants", invariants_json(traj.invariants)}};
    if (plan.base.record_pairwise) {
      Json dump{{"times", traj.times}, {"concurrence", Json::array()}};
      for (const RealMatrix& c : traj.concurrence) {
        Json m = Json::array();
        for (Eigen::Index r = 0; r < c.rows(); ++r) {
          Json row = Json::array();
          for (Eigen::Index col = 0; col < c.cols(); ++col) row.push_back(c(r, col));
          m.push_back(std::move(row));
        }
        dump["concurrence"].push_back(std::move(m));
      }
      files.add(dir + "concurrence.json", dump.dump() + "\n");
      entry["concurrence"] = dir + "concurrence.json";
    }
    run_entries.push_back(std::move(entry));
  }
  if (plan.edge_list) files.add("edges.csv", edge_list(sys.graph()));
  manifest["runs"] = run_entries;
  finish(files, manifest, start);
  return kSuccess;
}

}  // namespace postwalk::cli
