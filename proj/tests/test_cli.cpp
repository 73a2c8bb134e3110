#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"

using namespace postwalk;
using namespace postwalk::cli;
namespace fs = std::filesystem;

namespace {

const char* kSmallWalk = R"(
[graph]
family = "cylinder"
rows = 3
cols = 4

[channel]
kind = "qsw"
p = 0.5
eta = [0.0, 0.8]

[run]
initial_node = 5
t_max = 2.0
sample_interval = 0.5
)";

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("postwalk_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("toml and json configs resolve to the same plan") {
  const WalkPlan toml = parse_walk_plan(parse_config_text(kSmallWalk, "a.toml", false), false);
  const std::string json_text = R"({"graph": {"family": "cylinder", "rows": 3, "cols": 4},
    "channel": {"kind": "qsw", "p": 0.5, "eta": [0.0, 0.8]},
    "run": {"initial_node": 5, "t_max": 2.0, "sample_interval": 0.5}})";
  const WalkPlan json = parse_walk_plan(parse_config_text(json_text, "a.json", true), false);
  CHECK(to_json(toml.base) == to_json(json.base));
  CHECK(toml.etas == std::vector<double>{0.0, 0.8});
  CHECK(toml.eta_list);
  CHECK(toml.base.integration.dt == 0.005);
  CHECK(toml.base.channel.p == 0.5);
}

TEST_CASE("config diagnostics name the line and field") {
  const std::string bad_type = "[graph]\nfamily = \"torus\"\nrows = 5\ncols = 5\n[channel]\nkind = \"qsw\"\np = \"half\"\neta = 0.1\n[run]\ninitial_node = 0\n";
  const std::string msg = message_of([&] { parse_walk_plan(parse_config_text(bad_type, "c.toml", false), false); });
  CHECK(msg.find("c.toml:7") != std::string::npos);
  CHECK(msg.find("channel.p") != std::string::npos);

  const std::string syntax = message_of([] { parse_config_text("[graph\nfamily = 1\n", "s.toml", false); });
  CHECK(syntax.find("s.toml:1") != std::string::npos);
  const std::string json_syntax = message_of([] { parse_config_text("{\n\"graph\": {,}\n}", "s.json", true); });
  CHECK(json_syntax.find("s.json:2") != std::string::npos);

  const std::string unknown = "[graph]\nfamily = \"torus\"\nrows = 5\ncols = 5\ncolour = 1\n[channel]\nkind = \"qsw\"\np = 0.5\neta = 0.1\n[run]\ninitial_node = 0\n";
  CHECK(message_of([&] { parse_walk_plan(parse_config_text(unknown, "u.toml", false), false); }).find("graph.colour") !=
        std::string::npos);

  const std::string eta_range = "[graph]\nfamily = \"torus\"\nrows = 5\ncols = 5\n[channel]\nkind = \"qsw\"\np = 0.5\neta = 1.5\n[run]\ninitial_node = 0\n";
  CHECK_THROWS_AS(parse_walk_plan(parse_config_text(eta_range, "e.toml", false), false), ConfigError);

  const std::string missing_node = "[graph]\nfamily = \"torus\"\nrows = 5\ncols = 5\n[channel]\nkind = \"qsw\"\np = 0.5\neta = 0.5\n[run]\n";
  CHECK(message_of([&] { parse_walk_plan(parse_config_text(missing_node, "m.toml", false), false); })
            .find("run.initial_node") != std::string::npos);
}

TEST_CASE("spin config guards") {
  const std::string big = "[graph]\nfamily = \"line\"\nn = 12\n[channel]\neta = 0.5\n";
  CHECK(message_of([&] { parse_spin_plan(parse_config_text(big, "b.toml", false)); }).find("exceeds") !=
        std::string::npos);
  const std::string star = "[graph]\nfamily = \"star\"\nn = 6\n[channel]\neta = [0.0, 0.8]\n";
  const SpinPlan plan = parse_spin_plan(parse_config_text(star, "s.toml", false));
  CHECK(plan.base.initial_spin == 1);
  CHECK(plan.base.gamma == 0.5);
  CHECK(plan.base.orientation == HopOrientation::Both);
  const std::string grid = "[graph]\nfamily = \"torus\"\nn = 6\n[channel]\neta = 0.5\n";
  CHECK_THROWS_AS(parse_spin_plan(parse_config_text(grid, "g.toml", false)), ConfigError);
}

TEST_CASE("sweep config") {
  const std::string text = "[graph]\nfamily = \"cylinder\"\nrows = 5\ncols = 5\n[channel]\nkind = \"qsw\"\neta = 0.8\n"
                           "[run]\ninitial_node = 7\n[sweep]\naxis = \"p\"\nvalues = [0.1, 0.5]\nobserve_at = 10.0\n";
  const WalkPlan plan = parse_walk_plan(parse_config_text(text, "w.toml", false), true);
  REQUIRE(plan.sweep);
  CHECK(plan.sweep->axis == SweepAxis::P);
  CHECK(plan.sweep->values.size() == 2);
  const std::string zero_p = "[graph]\nfamily = \"cylinder\"\nrows = 5\ncols = 5\n[channel]\nkind = \"qsw\"\neta = 0.8\n"
                             "[run]\ninitial_node = 7\n[sweep]\naxis = \"p\"\nvalues = [0.0, 0.5]\n";
  CHECK_THROWS_AS(parse_walk_plan(parse_config_text(zero_p, "z.toml", false), true), ConfigError);
  CHECK_THROWS_AS(parse_walk_plan(parse_config_text(text, "w.toml", false), false), ConfigError);
}

TEST_CASE("doubles are written with 17 significant digits") {
  for (double x : {0.1, 1.0 / 3.0, 2.0e-17, 123456.789, -0.0}) CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("worker resolution") {
  CHECK(resolve_workers(3) == 3);
  setenv("POSTWALK_WORKERS", "2", 1);
  CHECK(resolve_workers(0) == 2);
  setenv("POSTWALK_WORKERS", "zero", 1);
  CHECK_THROWS_AS(resolve_workers(0), ConfigError);
  unsetenv("POSTWALK_WORKERS");
  CHECK(resolve_workers(0) >= 1);
}

TEST_CASE("simulate writes deterministic outputs independent of worker count") {
  const fs::path dir = scratch_dir("simulate");
  const fs::path config = write_file(dir / "walk.toml", kSmallWalk);
  CHECK(cmd_simulate({config.string(), (dir / "serial").string(), 1}) == kSuccess);
  CHECK(cmd_simulate({config.string(), (dir / "parallel").string(), 2}) == kSuccess);
  for (const char* file : {"eta_0/trajectory.csv", "eta_0.8/trajectory.csv", "eta_0.8/final_state.json"}) {
    CHECK(fs::file_size(dir / "serial" / file) > 0);
    CHECK(slurp(dir / "serial" / file) == slurp(dir / "parallel" / file));
  }
  const std::string csv = slurp(dir / "serial/eta_0.8/trajectory.csv");
  CHECK(csv.rfind("t,p_0,p_1,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 5);

  const Json manifest = Json::parse(slurp(dir / "serial/manifest.json"));
  CHECK(manifest["runs"].size() == 2);
  CHECK(manifest.contains("engine_version"));
  CHECK(manifest.contains("wall_time_s"));
  CHECK(manifest["runs"][1]["invariants"].contains("max_trace_drift"));
  for (const auto& path : manifest["outputs"]) CHECK(fs::file_size(path.get<std::string>()) > 0);

  const Json state = Json::parse(slurp(dir / "serial/eta_0/final_state.json"));
  CHECK(state["re"].size() == 12);
  CHECK(state["im"][0].size() == 12);
}

TEST_CASE("config errors leave no partial outputs") {
  const fs::path dir = scratch_dir("bad");
  const fs::path config = write_file(dir / "bad.toml", "[graph]\nfamily = \"cylinder\"\nrows = 5\ncols = 5\n"
                                                        "[channel]\nkind = \"qsw\"\np = 0.0\neta = 0.5\n[run]\ninitial_node = 1\n");
  CHECK_THROWS_AS(cmd_verify({config.string(), (dir / "out").string(), 1}), ConfigError);
  CHECK(!fs::exists(dir / "out"));
  CHECK_THROWS_AS(cmd_simulate({(dir / "missing.toml").string(), (dir / "out").string(), 1}), ConfigError);
  CHECK(!fs::exists(dir / "out"));
}

TEST_CASE("sweep rows keep their order and record failures") {
  const fs::path dir = scratch_dir("sweep");
  const fs::path config = write_file(dir / "sweep.toml",
                                     "[graph]\nfamily = \"torus\"\nrows = 3\ncols = 3\n[channel]\nkind = \"qsw\"\np = 0.5\n"
                                     "[run]\ninitial_node = 4\nt_max = 400.0\n[sweep]\naxis = \"eta\"\nvalues = [0.6, 0.0, 0.3]\n");
  CHECK(cmd_sweep({config.string(), (dir / "a").string(), 1}) == kSuccess);
  CHECK(cmd_sweep({config.string(), (dir / "b").string(), 3}) == kSuccess);
  const std::string csv = slurp(dir / "a/sweep.csv");
  CHECK(csv == slurp(dir / "b/sweep.csv"));
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  CHECK(header == "value,p_node0,p_node1,p_node2,p_node3,p_node4,p_node5,p_node6,p_node7,p_node8,coherence_l1,tau,beta,k,r2,status");
  std::vector<std::string> firsts;
  while (std::getline(lines, row)) {
    firsts.push_back(row.substr(0, row.find(',')));
    CHECK(row.find("0.1111111111") != std::string::npos);  // torus stays uniform
  }
  CHECK(firsts == std::vector<std::string>{"0.59999999999999998", "0", "0.29999999999999999"});

  const fs::path short_config = write_file(dir / "short.toml",
                                           "[graph]\nfamily = \"cylinder\"\nrows = 3\ncols = 3\n[channel]\nkind = \"qsw\"\np = 0.5\n"
                                           "[run]\ninitial_node = 4\nt_max = 1.0\n[sweep]\naxis = \"eta\"\nvalues = [0.5]\n");
  CHECK(cmd_sweep({short_config.string(), (dir / "c").string(), 1}) == kSuccess);
  CHECK(slurp(dir / "c/sweep.csv").find(",non_convergence") != std::string::npos);
}

TEST_CASE("verify reports the constraint") {
  const fs::path dir = scratch_dir("verify");
  const fs::path config = write_file(dir / "v.toml", "[graph]\nfamily = \"cylinder\"\nrows = 3\ncols = 4\n[channel]\nkind = \"qsw\"\n"
                                                      "p = 0.5\neta = 0.6\n[run]\ninitial_node = 5\nt_max = 1000.0\n");
  CHECK(cmd_verify({config.string(), (dir / "out").string(), 1}) == kSuccess);
  const Json report = Json::parse(slurp(dir / "out/report.json"));
  CHECK(report["max_residual"].get<double>() < 1e-6);
  CHECK(report["predicted"].size() == 12);
  CHECK(report["actual"].size() == 12);
  CHECK(report["uniform_ok"] == false);
}

TEST_CASE("spin command writes populations and concurrence") {
  const fs::path dir = scratch_dir("spin");
  const fs::path config = write_file(dir / "s.toml", "[graph]\nfamily = \"line\"\nn = 3\n[channel]\ngamma = 0.5\neta = 0.8\n"
                                                      "[run]\nt_max = 2.0\nsample_interval = 0.5\n[spin]\npairwise = true\n[output]\nedge_list = true\n");
  CHECK(cmd_spin({config.string(), (dir / "out").string(), 1}) == kSuccess);
  const std::string csv = slurp(dir / "out/spin_trajectory.csv");
  CHECK(csv.rfind("t,P_0,P_1,P_2,C_max\n0,1,0,0,0\n", 0) == 0);
  const Json pairwise = Json::parse(slurp(dir / "out/concurrence.json"));
  CHECK(pairwise["concurrence"].size() == 5);
  CHECK(slurp(dir / "out/edges.csv") == "src,dst\n0,1\n1,2\n");
}
