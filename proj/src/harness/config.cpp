#include "cdg/harness/config.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "cdg/coverage.hpp"

namespace cdg::harness {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& message) { throw ConfigError(message); }

void expect_keys(const json& j, const char* section,
                 std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known)
      fail(std::string("unknown key '") + it.key() + "' in " + section);
  }
}

const json& section(const json& j, const char* key) {
  const json& s = j.at(key);
  if (!s.is_object()) fail(std::string(key) + " must be an object");
  return s;
}

long long get_int(const json& j, const char* name, long long fallback) {
  if (!j.contains(name)) return fallback;
  const json& v = j.at(name);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    fail(std::string(name) + " must be an integer");
  return v.get<long long>();
}

double get_real(const json& j, const char* name, double fallback) {
  if (!j.contains(name)) return fallback;
  const json& v = j.at(name);
  if (!v.is_number()) fail(std::string(name) + " must be a number");
  return v.get<double>();
}

std::string get_str(const json& j, const char* name, std::string fallback) {
  if (!j.contains(name)) return fallback;
  const json& v = j.at(name);
  if (!v.is_string()) fail(std::string(name) + " must be a string");
  return v.get<std::string>();
}

std::uint64_t get_seed(const json& j, const char* name, std::uint64_t fallback) {
  if (!j.contains(name)) return fallback;
  const json& v = j.at(name);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    fail(std::string(name) + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

void parse_simulator(const json& j, SimulatorSpec& sim) {
  expect_keys(j, "simulator", {"kind", "bins", "target"});
  const std::string kind = get_str(j, "kind", "northstar");
  if (kind == "northstar") {
    sim.kind = SimulatorKind::kNorthStar;
  } else if (kind == "multiplication") {
    sim.kind = SimulatorKind::kMultiplication;
  } else {
    fail("simulator.kind must be 'northstar' or 'multiplication', got '" +
         kind + "'");
  }
  sim.bins = static_cast<int>(get_int(j, "bins", sim.bins));
  if (j.contains("target")) {
    const json& t = j.at("target");
    if (!t.is_array()) fail("simulator.target must be an array of indices");
    sim.target.clear();
    for (const json& v : t) {
      if (!v.is_number_integer() && !v.is_number_unsigned())
        fail("simulator.target entries must be integers");
      sim.target.push_back(v.get<int>());
    }
  }
}

void parse_optimizer(const json& j, ExperimentConfig& cfg) {
  expect_keys(j, "optimizer",
              {"kind", "n_directions", "samples_per_point", "step", "h_min",
               "mu_init", "max_iters", "max_ls_iters", "lbfgs_memory",
               "fixed_alpha", "line_search_rule", "t_init"});
  const std::string kind = get_str(j, "kind", "steepest_descent");
  if (kind == "implicit_filtering") {
    cfg.optimizer = OptimizerKind::kImplicitFiltering;
  } else if (kind == "steepest_descent") {
    cfg.optimizer = OptimizerKind::kSteepestDescent;
  } else if (kind == "lbfgs") {
    cfg.optimizer = OptimizerKind::kLbfgs;
  } else {
    fail("optimizer.kind must be one of implicit_filtering, steepest_descent, "
         "lbfgs; got '" + kind + "'");
  }
  OptimizerConfig& opt = cfg.opt;
  opt.n_directions = static_cast<int>(get_int(j, "n_directions", opt.n_directions));
  opt.samples_per_point = get_int(j, "samples_per_point", opt.samples_per_point);
  opt.step = get_real(j, "step", opt.step);
  opt.h_min = get_real(j, "h_min", opt.h_min);
  opt.mu_init = get_real(j, "mu_init", opt.mu_init);
  opt.max_iters = static_cast<int>(get_int(j, "max_iters", opt.max_iters));
  opt.max_ls_iters =
      static_cast<int>(get_int(j, "max_ls_iters", opt.max_ls_iters));
  opt.lbfgs_memory =
      static_cast<int>(get_int(j, "lbfgs_memory", opt.lbfgs_memory));
  if (j.contains("fixed_alpha") && !j.at("fixed_alpha").is_null()) {
    const json& v = j.at("fixed_alpha");
    if (!v.is_number()) fail("optimizer.fixed_alpha must be a number or null");
    opt.fixed_alpha = v.get<double>();
  }
  const std::string rule = get_str(j, "line_search_rule", "pseudocode");
  if (rule == "pseudocode") {
    opt.line_search_rule = LineSearchRule::kPseudocode;
  } else if (rule == "noise_test") {
    opt.line_search_rule = LineSearchRule::kNoiseTest;
  } else {
    fail("optimizer.line_search_rule must be 'pseudocode' or 'noise_test', "
         "got '" + rule + "'");
  }
  if (j.contains("t_init")) {
    const json& t = j.at("t_init");
    if (!t.is_array()) fail("optimizer.t_init must be an array of numbers");
    opt.t_init.resize(static_cast<Eigen::Index>(t.size()));
    Eigen::Index i = 0;
    for (const json& v : t) {
      if (!v.is_number()) fail("optimizer.t_init entries must be numbers");
      opt.t_init(i++) = v.get<double>();
    }
  }
}

void parse_ensemble(const json& j, EnsembleSpec& ens) {
  expect_keys(j, "ensemble", {"runs", "budget", "cells"});
  ens.runs = static_cast<int>(get_int(j, "runs", ens.runs));
  ens.budget = get_int(j, "budget", ens.budget);
  if (j.contains("cells")) {
    const json& cells = j.at("cells");
    if (!cells.is_array()) fail("ensemble.cells must be an array");
    ens.cells.clear();
    for (const json& c : cells) {
      if (!c.is_array() || c.size() != 2 || !c.at(0).is_number_integer() ||
          !c.at(1).is_number_integer())
        fail("each ensemble cell must be an integer [N, n] pair");
      ens.cells.emplace_back(c.at(0).get<int>(), c.at(1).get<int>());
    }
  }
}

void parse_explore(const json& j, ExploreSpec& exp) {
  expect_keys(j, "explore", {"templates", "runs_per_template"});
  exp.templates = get_int(j, "templates", exp.templates);
  exp.runs_per_template = get_int(j, "runs_per_template", exp.runs_per_template);
}

void parse_landscape(const json& j, LandscapeSpec& land) {
  expect_keys(j, "landscape", {"extent", "points", "samples", "center"});
  land.extent = get_real(j, "extent", land.extent);
  land.points = static_cast<int>(get_int(j, "points", land.points));
  land.samples = get_int(j, "samples", land.samples);
  if (j.contains("center")) {
    const json& c = j.at("center");
    if (!c.is_array()) fail("landscape.center must be an array of numbers");
    land.center.resize(static_cast<Eigen::Index>(c.size()));
    Eigen::Index i = 0;
    for (const json& v : c) {
      if (!v.is_number()) fail("landscape.center entries must be numbers");
      land.center(i++) = v.get<double>();
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (simulator.bins < 1) fail("simulator.bins must be >= 1");
  const int events = simulator.kind == SimulatorKind::kNorthStar
                         ? kNorthStarEvents
                         : simulator.bins;
  for (int t : simulator.target)
    if (t < 0 || t >= events)
      fail("simulator.target index " + std::to_string(t) +
           " is outside [0, " + std::to_string(events) + ")");
  try {
    opt.validate();
  } catch (const std::invalid_argument& e) {
    fail(std::string("optimizer: ") + e.what());
  }
  if (ensemble.runs < 1) fail("ensemble.runs must be >= 1");
  if (ensemble.budget < 1) fail("ensemble.budget must be >= 1");
  for (const auto& [n_samples, n_dirs] : ensemble.cells) {
    if (n_samples < 1 || n_dirs < 1)
      fail("ensemble cells must have N >= 1 and n >= 1");
    if (static_cast<long long>(n_samples) * n_dirs != ensemble.budget)
      fail("ensemble cell (" + std::to_string(n_samples) + ", " +
           std::to_string(n_dirs) + ") violates the per-iteration budget " +
           std::to_string(ensemble.budget));
  }
  if (explore.templates < 1) fail("explore.templates must be >= 1");
  if (explore.runs_per_template < 1)
    fail("explore.runs_per_template must be >= 1");
  if (!(landscape.extent >= 0.0)) fail("landscape.extent must be >= 0");
  if (landscape.points < 2) fail("landscape.points must be >= 2");
  if (landscape.samples < 1) fail("landscape.samples must be >= 1");
  const int dim = simulator.kind == SimulatorKind::kNorthStar ? kTemplateDim
                                                              : simulator.bins;
  if (landscape.center.size() != 0 && landscape.center.size() != dim)
    fail("landscape.center must have " + std::to_string(dim) + " entries");
  if (opt.t_init.size() != 0 && opt.t_init.size() != dim)
    fail("optimizer.t_init must have " + std::to_string(dim) + " entries");
  if (reference_samples < 1) fail("reference_samples must be >= 1");
  if (workers < 0) fail("workers must be >= 0");
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("config root must be a JSON object");
  expect_keys(j, "config",
              {"simulator", "optimizer", "ensemble", "explore", "landscape",
               "reference_samples", "workers", "master_seed", "out_dir"});

  ExperimentConfig cfg;
  try {
    if (j.contains("simulator")) parse_simulator(section(j, "simulator"), cfg.simulator);
    if (j.contains("optimizer")) parse_optimizer(section(j, "optimizer"), cfg);
    if (j.contains("ensemble")) parse_ensemble(section(j, "ensemble"), cfg.ensemble);
    if (j.contains("explore")) parse_explore(section(j, "explore"), cfg.explore);
    if (j.contains("landscape")) parse_landscape(section(j, "landscape"), cfg.landscape);
  } catch (const json::exception& e) {
    fail(std::string("malformed config value: ") + e.what());
  }
  cfg.reference_samples = get_int(j, "reference_samples", cfg.reference_samples);
  cfg.workers = static_cast<int>(get_int(j, "workers", cfg.workers));
  cfg.master_seed = get_seed(j, "master_seed", cfg.master_seed);
  cfg.out_dir = get_str(j, "out_dir", cfg.out_dir);

  cfg.opt.master_seed = cfg.master_seed;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string render_config(const ExperimentConfig& config) {
  ordered_json j;
  ordered_json sim;
  sim["kind"] = simulator_name(config.simulator.kind);
  sim["bins"] = config.simulator.bins;
  sim["target"] = config.simulator.target;
  j["simulator"] = std::move(sim);

  ordered_json opt;
  opt["kind"] = optimizer_name(config.optimizer);
  opt["n_directions"] = config.opt.n_directions;
  opt["samples_per_point"] = config.opt.samples_per_point;
  opt["step"] = config.opt.step;
  opt["h_min"] = config.opt.h_min;
  opt["mu_init"] = config.opt.mu_init;
  opt["max_iters"] = config.opt.max_iters;
  opt["max_ls_iters"] = config.opt.max_ls_iters;
  opt["lbfgs_memory"] = config.opt.lbfgs_memory;
  if (config.opt.fixed_alpha) {
    opt["fixed_alpha"] = *config.opt.fixed_alpha;
  } else {
    opt["fixed_alpha"] = nullptr;
  }
  opt["line_search_rule"] =
      config.opt.line_search_rule == LineSearchRule::kPseudocode
          ? "pseudocode"
          : "noise_test";
  ordered_json t_init = ordered_json::array();
  for (Eigen::Index i = 0; i < config.opt.t_init.size(); ++i)
    t_init.push_back(config.opt.t_init(i));
  opt["t_init"] = std::move(t_init);
  j["optimizer"] = std::move(opt);

  ordered_json ens;
  ens["runs"] = config.ensemble.runs;
  ens["budget"] = config.ensemble.budget;
  ordered_json cells = ordered_json::array();
  for (const auto& [n_samples, n_dirs] : config.ensemble.cells)
    cells.push_back({n_samples, n_dirs});
  ens["cells"] = std::move(cells);
  j["ensemble"] = std::move(ens);

  ordered_json exp;
  exp["templates"] = config.explore.templates;
  exp["runs_per_template"] = config.explore.runs_per_template;
  j["explore"] = std::move(exp);

  ordered_json land;
  land["extent"] = config.landscape.extent;
  land["points"] = config.landscape.points;
  land["samples"] = config.landscape.samples;
  ordered_json center = ordered_json::array();
  for (Eigen::Index i = 0; i < config.landscape.center.size(); ++i)
    center.push_back(config.landscape.center(i));
  land["center"] = std::move(center);
  j["landscape"] = std::move(land);

  j["reference_samples"] = config.reference_samples;
  j["workers"] = config.workers;
  j["master_seed"] = config.master_seed;
  j["out_dir"] = config.out_dir;
  return j.dump(2) + "\n";
}

const char* simulator_name(SimulatorKind kind) {
  return kind == SimulatorKind::kNorthStar ? "northstar" : "multiplication";
}

const char* optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kImplicitFiltering:
      return "implicit_filtering";
    case OptimizerKind::kSteepestDescent:
      return "steepest_descent";
    default:
      return "lbfgs";
  }
}

}  // namespace cdg::harness
