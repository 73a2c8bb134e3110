#pragma once

#include <string>

#include "config.hpp"

namespace postwalk::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kInvariant = 2, kNonConvergence = 3 };

inline constexpr double kVerifyThreshold = 1e-6;

struct CommandContext {
  std::string config_path;
  std::string out_dir;
  int workers = 1;
};

int cmd_simulate(const CommandContext& ctx);
int cmd_sweep(const CommandContext& ctx);
int cmd_verify(const CommandContext& ctx);
int cmd_spin(const CommandContext& ctx);

/// --workers, then POSTWALK_WORKERS, then hardware concurrency.
int resolve_workers(int requested);

std::string format_double(double x);

}  // namespace postwalk::cli
