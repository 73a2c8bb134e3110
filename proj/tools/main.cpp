#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace pc = postwalk::cli;

int main(int argc, char** argv) {
  CLI::App app{"postselected quantum walk engine"};
  app.require_subcommand(1);
  pc::CommandContext ctx;
  int workers = 0;

  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const pc::CommandContext&);
  };
  const Entry entries[] = {
      {"simulate", "integrate one run per eta and write trajectories", pc::cmd_simulate},
      {"sweep", "steady states and relaxation fits along eta or p", pc::cmd_sweep},
      {"verify", "check the steady state against the analytic population condition", pc::cmd_verify},
      {"spin", "single-excitation spin network dynamics and concurrence", pc::cmd_spin},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> subs;
  for (const Entry& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("--config", ctx.config_path, "TOML (or .json) run configuration")->required();
    sub->add_option("--out", ctx.out_dir, "output directory")->required();
    sub->add_option("--workers", workers, "parallel runs (default: POSTWALK_WORKERS or core count)")
        ->check(CLI::PositiveNumber);
    subs.emplace_back(sub, &e);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? pc::kSuccess : pc::kUsage;
  }

  try {
    ctx.workers = pc::resolve_workers(workers);
    for (const auto& [sub, entry] : subs)
      if (sub->parsed()) return entry->run(ctx);
  } catch (const postwalk::InvariantViolation& e) {
    std::cerr << "postwalk: invariant violation (" << e.quantity() << " = " << e.magnitude() << ", step " << e.step()
              << "): " << e.what() << "\n";
    return pc::kInvariant;
  } catch (const postwalk::NonConvergence& e) {
    std::cerr << "postwalk: no steady state: " << e.what() << "\n";
    return pc::kNonConvergence;
  } catch (const pc::ConfigError& e) {
    std::cerr << "postwalk: config error: " << e.what() << "\n";
    return pc::kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "postwalk: invalid input: " << e.what() << "\n";
    return pc::kUsage;
  } catch (const std::out_of_range& e) {
    std::cerr << "postwalk: invalid input: " << e.what() << "\n";
    return pc::kUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "postwalk: numerical failure: " << e.what() << "\n";
    return pc::kInvariant;
  } catch (const std::exception& e) {
    std::cerr << "postwalk: error: " << e.what() << "\n";
    return pc::kUsage;
  }
  return pc::kUsage;
}
