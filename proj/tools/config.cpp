#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml++/toml.hpp>

namespace postwalk::cli {

namespace {

void convert_toml(const toml::node& node, Json& out, const std::string& key_path, std::map<std::string, int>& lines) {
  if (node.source().begin.line > 0) lines[key_path] = static_cast<int>(node.source().begin.line);
  if (const auto* table = node.as_table()) {
    out = Json::object();
    for (const auto& [key, value] : *table) {
      const std::string child = key_path.empty() ? std::string(key.str()) : key_path + "." + std::string(key.str());
      convert_toml(value, out[std::string(key.str())], child, lines);
    }
  } else if (const auto* array = node.as_array()) {
    out = Json::array();
    for (std::size_t i = 0; i < array->size(); ++i) {
      Json item;
      convert_toml((*array)[i], item, key_path + "[" + std::to_string(i) + "]", lines);
      out.push_back(std::move(item));
    }
  } else if (const auto* v = node.as_integer()) {
    out = v->get();
  } else if (const auto* f = node.as_floating_point()) {
    out = f->get();
  } else if (const auto* b = node.as_boolean()) {
    out = b->get();
  } else if (const auto* s = node.as_string()) {
    out = s->get();
  } else {
    throw ConfigError(key_path + ": unsupported TOML value type");
  }
}

// Typed, path-aware view of one config table.
class Section {
 public:
  Section(const ConfigDocument& doc, std::string name) : doc_(doc), name_(std::move(name)) {
    if (doc.data.contains(name_)) {
      node_ = &doc.data.at(name_);
      if (!node_->is_object()) fail(name_, "expected a table");
    }
  }

  bool present() const { return node_ != nullptr; }
  bool has(const std::string& key) const { return node_ && node_->contains(key); }

  [[noreturn]] void fail(const std::string& key_path, const std::string& message) const {
    std::ostringstream out;
    out << doc_.path;
    if (auto it = doc_.lines.find(key_path); it != doc_.lines.end()) out << ":" << it->second;
    out << ": field '" << key_path << "': " << message;
    throw ConfigError(out.str());
  }

  std::string path(const std::string& key) const { return name_ + "." + key; }

  const Json& raw(const std::string& key) const {
    if (!has(key)) fail(path(key), "missing required field");
    return node_->at(key);
  }

  double number(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_number()) fail(path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path(key), "must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  int integer(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_number_integer()) fail(path(key), "expected an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_boolean()) fail(path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_string()) fail(path(key), "expected a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) const { return has(key) ? text(key) : fallback; }

  std::vector<int> integers(const std::string& key) const {
    std::vector<int> out;
    if (!has(key)) return out;
    const Json& v = raw(key);
    if (!v.is_array()) fail(path(key), "expected an array of integers");
    for (const Json& x : v) {
      if (!x.is_number_integer()) fail(path(key), "expected an array of integers");
      out.push_back(x.get<int>());
    }
    return out;
  }

  /// Scalar or non-empty array of numbers; `was_list` reports which.
  std::vector<double> numbers(const std::string& key, bool* was_list = nullptr) const {
    const Json& v = raw(key);
    std::vector<double> out;
    if (v.is_number()) {
      out.push_back(v.get<double>());
    } else if (v.is_array() && !v.empty()) {
      for (const Json& x : v) {
        if (!x.is_number()) fail(path(key), "expected a number or an array of numbers");
        out.push_back(x.get<double>());
      }
    } else {
      fail(path(key), "expected a number or a non-empty array of numbers");
    }
    if (was_list) *was_list = v.is_array();
    for (double x : out)
      if (!std::isfinite(x)) fail(path(key), "must be finite");
    return out;
  }

  void allow_only(const std::set<std::string>& keys) const {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      (void)value;
      if (!keys.count(key)) fail(path(key), "unknown field");
    }
  }

 private:
  const ConfigDocument& doc_;
  std::string name_;
  const Json* node_ = nullptr;
};

void check_top_level(const ConfigDocument& doc, const std::set<std::string>& allowed) {
  if (!doc.data.is_object()) throw ConfigError(doc.path + ": top level must be a table");
  for (const auto& [key, value] : doc.data.items()) {
    (void)value;
    if (!allowed.count(key)) {
      std::ostringstream out;
      out << doc.path;
      if (auto it = doc.lines.find(key); it != doc.lines.end()) out << ":" << it->second;
      out << ": unknown section '" << key << "'";
      throw ConfigError(out.str());
    }
  }
}

GraphSpec parse_graph(const Section& s) {
  s.allow_only({"family", "rows", "cols", "n", "defects"});
  GraphSpec g;
  g.family = s.text("family");
  if (is_grid_family(g.family)) {
    g.rows = s.integer("rows");
    g.cols = s.integer("cols");
    if (s.has("n")) s.fail(s.path("n"), "grid families take rows and cols, not n");
  } else {
    g.n = s.integer("n");
    if (s.has("rows") || s.has("cols")) s.fail(s.path("family"), "rows/cols only apply to grid families");
  }
  g.defects = s.integers("defects");
  try {
    (void)resolve_graph(g);
  } catch (const std::exception& e) {
    s.fail(s.path("family"), e.what());
  }
  return g;
}

IntegrationSettings parse_integration(const Section& run, const Section& tol, const IntegrationSettings& defaults) {
  IntegrationSettings out = defaults;
  out.dt = run.number("dt", out.dt);
  out.t_max = run.number("t_max", out.t_max);
  out.sample_interval = run.number("sample_interval", out.sample_interval);
  tol.allow_only({"hermiticity", "trace", "positivity", "steady"});
  out.tol.hermiticity = tol.number("hermiticity", out.tol.hermiticity);
  out.tol.trace = tol.number("trace", out.tol.trace);
  out.tol.positivity = tol.number("positivity", out.tol.positivity);
  out.tol.steady = tol.number("steady", out.tol.steady);
  try {
    out.validate();
  } catch (const std::exception& e) {
    run.fail(run.path("dt"), e.what());
  }
  return out;
}

void check_eta(const Section& s, const std::vector<double>& etas) {
  for (double eta : etas)
    if (!(eta >= 0.0 && eta <= 1.0)) s.fail(s.path("eta"), "eta must lie in [0, 1]");
}

}  // namespace

ConfigDocument parse_config_text(const std::string& text, const std::string& name, bool json) {
  ConfigDocument doc;
  doc.path = name;
  if (json) {
    try {
      doc.data = Json::parse(text);
    } catch (const Json::parse_error& e) {
      const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
      const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
      throw ConfigError(name + ":" + std::to_string(line) + ": JSON syntax error: " + e.what());
    }
  } else {
    try {
      const toml::table table = toml::parse(text, name);
      convert_toml(table, doc.data, "", doc.lines);
    } catch (const toml::parse_error& e) {
      throw ConfigError(name + ":" + std::to_string(e.source().begin.line) + ":" +
                        std::to_string(e.source().begin.column) + ": TOML syntax error: " +
                        std::string(e.description()));
    }
  }
  if (!doc.data.is_object()) throw ConfigError(name + ": top level must be a table");
  return doc;
}

ConfigDocument load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  return parse_config_text(buffer.str(), path, json);
}

WalkPlan parse_walk_plan(const ConfigDocument& doc, bool require_sweep) {
  check_top_level(doc, {"graph", "channel", "run", "tolerances", "sweep", "output"});
  const Section graph(doc, "graph"), channel(doc, "channel"), run(doc, "run"), tol(doc, "tolerances"),
      sweep(doc, "sweep"), output(doc, "output");
  if (!graph.present()) throw ConfigError(doc.path + ": missing [graph] section");
  if (!channel.present()) throw ConfigError(doc.path + ": missing [channel] section");
  if (!run.present()) throw ConfigError(doc.path + ": missing [run] section");

  WalkPlan plan;
  plan.base.graph = parse_graph(graph);

  channel.allow_only({"kind", "eta", "p", "gamma"});
  ChannelKind kind{};
  try {
    kind = parse_channel_kind(channel.text("kind"));
  } catch (const std::invalid_argument& e) {
    channel.fail(channel.path("kind"), e.what());
  }
  if (kind == ChannelKind::SpinHop) channel.fail(channel.path("kind"), "spin_hop belongs to the spin command");
  const bool sweeping_eta = require_sweep && sweep.present() && sweep.text("axis", "") == "eta";
  if (!sweeping_eta) {
    plan.etas = channel.numbers("eta", &plan.eta_list);
    check_eta(channel, plan.etas);
  } else {
    if (channel.has("eta")) channel.fail(channel.path("eta"), "eta is the sweep axis; remove it from [channel]");
    plan.etas = {0.0};
  }
  if (kind == ChannelKind::Qsw) {
    if (channel.has("gamma")) channel.fail(channel.path("gamma"), "qsw takes p, not gamma");
    const bool sweeping_p = require_sweep && sweep.present() && sweep.text("axis", "") == "p";
    const double p = sweeping_p ? 0.5 : channel.number("p");
    if (sweeping_p && channel.has("p")) channel.fail(channel.path("p"), "p is the sweep axis; remove it from [channel]");
    if (!(p >= 0.0 && p <= 1.0)) channel.fail(channel.path("p"), "p must lie in [0, 1]");
    plan.base.channel = NoiseChannel{ChannelKind::Qsw, plan.etas.front(), 0.0, p};
  } else {
    if (channel.has("p")) channel.fail(channel.path("p"), "haken_strobl takes gamma, not p");
    const double gamma = channel.number("gamma");
    if (!(gamma >= 0.0)) channel.fail(channel.path("gamma"), "gamma must be >= 0");
    plan.base.channel = NoiseChannel{ChannelKind::HakenStrobl, plan.etas.front(), gamma, 0.0};
  }

  run.allow_only({"initial_node", "dt", "t_max", "sample_interval", "stop_when_steady", "trace_distance", "steady_t_max"});
  plan.base.initial_node = run.integer("initial_node");
  plan.base.integration = parse_integration(run, tol, IntegrationSettings{});
  plan.base.stop_when_steady = run.boolean("stop_when_steady", false);
  plan.trace_distance = run.boolean("trace_distance", false);
  plan.steady_t_max = run.number("steady_t_max", plan.steady_t_max);
  if (!(plan.steady_t_max > 0.0)) run.fail(run.path("steady_t_max"), "must be > 0");
  try {
    plan.base.validate();
  } catch (const std::exception& e) {
    run.fail(run.path("initial_node"), e.what());
  }
  if (plan.trace_distance && !(plan.base.channel.rate() > 0.0)) {
    run.fail(run.path("trace_distance"), "trace distance to the steady state needs p > 0 or gamma > 0");
  }

  output.allow_only({"edge_list"});
  plan.edge_list = output.boolean("edge_list", false);

  if (require_sweep) {
    if (!sweep.present()) throw ConfigError(doc.path + ": missing [sweep] section");
    sweep.allow_only({"axis", "values", "observe_at"});
    SweepPlan sp;
    const std::string axis = sweep.text("axis");
    if (axis == "eta") {
      sp.axis = SweepAxis::Eta;
    } else if (axis == "p") {
      sp.axis = SweepAxis::P;
      if (kind != ChannelKind::Qsw) sweep.fail(sweep.path("axis"), "a p sweep needs the qsw channel");
    } else {
      sweep.fail(sweep.path("axis"), "expected \"eta\" or \"p\"");
    }
    sp.values = sweep.numbers("values");
    for (double v : sp.values) {
      if (!(v >= 0.0 && v <= 1.0)) sweep.fail(sweep.path("values"), "values must lie in [0, 1]");
      if (sp.axis == SweepAxis::P && !(v > 0.0)) sweep.fail(sweep.path("values"), "steady-state detection needs p > 0");
    }
    if (sweep.has("observe_at")) {
      sp.observe_at = sweep.number("observe_at");
      if (!(*sp.observe_at > 0.0)) sweep.fail(sweep.path("observe_at"), "must be > 0");
    }
    if (sp.axis == SweepAxis::Eta && !(plan.base.channel.rate() > 0.0)) {
      channel.fail(channel.path(kind == ChannelKind::Qsw ? "p" : "gamma"), "steady-state detection needs p > 0 or gamma > 0");
    }
    plan.sweep = sp;
  } else if (sweep.present()) {
    throw ConfigError(doc.path + ": [sweep] is only read by the sweep command");
  }
  return plan;
}

SpinPlan parse_spin_plan(const ConfigDocument& doc) {
  check_top_level(doc, {"graph", "channel", "run", "tolerances", "spin", "output"});
  const Section graph(doc, "graph"), channel(doc, "channel"), run(doc, "run"), tol(doc, "tolerances"),
      spin(doc, "spin"), output(doc, "output");
  if (!graph.present()) throw ConfigError(doc.path + ": missing [graph] section");
  if (!channel.present()) throw ConfigError(doc.path + ": missing [channel] section");

  SpinPlan plan;
  graph.allow_only({"family", "n"});
  plan.base.graph.family = graph.text("family");
  if (is_grid_family(plan.base.graph.family)) {
    graph.fail(graph.path("family"), "spin runs use line, cycle, star or complete");
  }
  plan.base.graph.n = graph.integer("n");
  if (plan.base.graph.n > kMaxSpins) {
    graph.fail(graph.path("n"), "n_spins = " + std::to_string(plan.base.graph.n) + " exceeds the limit of " +
                                    std::to_string(kMaxSpins) + " (Hilbert space 2^n)");
  }

  channel.allow_only({"kind", "eta", "gamma"});
  if (channel.text("kind", "spin_hop") != "spin_hop") channel.fail(channel.path("kind"), "spin runs use spin_hop");
  plan.etas = channel.numbers("eta", &plan.eta_list);
  check_eta(channel, plan.etas);
  plan.base.eta = plan.etas.front();
  plan.base.gamma = channel.number("gamma", 0.5);
  if (!(plan.base.gamma >= 0.0)) channel.fail(channel.path("gamma"), "gamma must be >= 0");

  run.allow_only({"initial_spin", "dt", "t_max", "sample_interval", "stop_when_steady"});
  const int default_spin = plan.base.graph.family == "star" ? 1 : 0;
  plan.base.initial_spin = run.integer("initial_spin", default_spin);
  plan.base.integration = parse_integration(run, tol, IntegrationSettings{});
  plan.base.stop_when_steady = run.boolean("stop_when_steady", false);

  spin.allow_only({"orientation", "pairwise"});
  const std::string orientation = spin.text("orientation", "both");
  if (orientation == "both") {
    plan.base.orientation = HopOrientation::Both;
  } else if (orientation == "single") {
    plan.base.orientation = HopOrientation::Single;
  } else {
    spin.fail(spin.path("orientation"), "expected \"both\" or \"single\"");
  }
  plan.base.record_pairwise = spin.boolean("pairwise", false);

  output.allow_only({"edge_list"});
  plan.edge_list = output.boolean("edge_list", false);

  try {
    plan.base.validate();
    (void)make_spin_system(plan.base);
  } catch (const std::exception& e) {
    graph.fail(graph.path("n"), e.what());
  }
  return plan;
}

Json to_json(const IntegrationSettings& s) {
  return Json{{"dt", s.dt},
              {"t_max", s.t_max},
              {"sample_interval", s.sample_interval},
              {"tolerances",
               {{"hermiticity", s.tol.hermiticity},
                {"trace", s.tol.trace},
                {"positivity", s.tol.positivity},
                {"steady", s.tol.steady}}}};
}

Json to_json(const SimConfig& c) {
  Json graph{{"family", c.graph.family}};
  if (is_grid_family(c.graph.family)) {
    graph["rows"] = c.graph.rows;
    graph["cols"] = c.graph.cols;
  } else {
    graph["n"] = c.graph.n;
  }
  graph["defects"] = c.graph.defects;
  Json channel{{"kind", to_string(c.channel.kind)}, {"eta", c.channel.eta}};
  if (c.channel.kind == ChannelKind::Qsw) {
    channel["p"] = c.channel.p;
  } else {
    channel["gamma"] = c.channel.gamma;
  }
  return Json{{"graph", graph},
              {"channel", channel},
              {"initial_node", c.initial_node},
              {"stop_when_steady", c.stop_when_steady},
              {"integration", to_json(c.integration)}};
}

Json to_json(const SpinRunConfig& c) {
  return Json{{"graph", {{"family", c.graph.family}, {"n", c.graph.n}}},
              {"channel", {{"kind", "spin_hop"}, {"gamma", c.gamma}, {"eta", c.eta}}},
              {"initial_spin", c.initial_spin},
              {"orientation", c.orientation == HopOrientation::Both ? "both" : "single"},
              {"j_coupling", 1.0},
              {"stop_when_steady", c.stop_when_steady},
              {"integration", to_json(c.integration)}};
}

}  // namespace postwalk::cli
