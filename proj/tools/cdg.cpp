// Command-line front end for the coverage-directed-generation toolkit.
//
//   cdg <command> --config experiment.json [--seed S] [--out DIR] [--workers W]
//
// Commands: explore, optimize, ensemble, landscape, true-prob.  All runs are
// deterministic given the config and seed; --seed/--out/--workers override
// the corresponding config fields, and every command snapshots the effective
// config into the output directory next to its artifacts.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <json.hpp>

#include "cdg/harness/runner.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory override");
  cmd->add_option("--seed", args.seed, "master seed override");
  cmd->add_option("--workers", args.workers, "worker thread override");
}

cdg::harness::ExperimentConfig load(const CommonArgs& args) {
  cdg::harness::ExperimentConfig config =
      cdg::harness::load_config(args.config_path);
  if (args.seed) {
    config.master_seed = *args.seed;
    config.opt.master_seed = *args.seed;
  }
  if (args.workers) config.workers = *args.workers;
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  config.validate();
  return config;
}

Eigen::VectorXd load_point(const std::string& path) {
  if (path.empty()) return Eigen::VectorXd();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cdg::harness::ConfigError("cannot open point file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw cdg::harness::ConfigError(std::string("point file: ") + e.what());
  }
  if (!j.is_array())
    throw cdg::harness::ConfigError("point file must hold a JSON array");
  Eigen::VectorXd x(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw cdg::harness::ConfigError("point entries must be numbers");
    x(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return x;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coverage-directed generation experiments"};
  app.require_subcommand(1);

  CommonArgs explore_args, optimize_args, ensemble_args, landscape_args,
      prob_args;
  std::string point_path;

  CLI::App* explore = app.add_subcommand(
      "explore", "hit statistics of random directive templates");
  add_common(explore, explore_args);

  CLI::App* optimize = app.add_subcommand(
      "optimize", "one optimization run with an iteration table");
  add_common(optimize, optimize_args);

  CLI::App* ensemble = app.add_subcommand(
      "ensemble", "repeated seeded runs over (N, n) budget cells");
  add_common(ensemble, ensemble_args);

  CLI::App* landscape = app.add_subcommand(
      "landscape", "objective values on a random 2-D slice");
  add_common(landscape, landscape_args);

  CLI::App* prob = app.add_subcommand(
      "true-prob", "high-precision target probability at a point");
  add_common(prob, prob_args);
  prob->add_option("--point", point_path,
                   "JSON array of logits (default: origin)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);  // 0 for --help, nonzero for usage errors
  }

  try {
    std::string status;
    if (explore->parsed()) {
      const auto config = load(explore_args);
      status = cdg::harness::command_explore(config, config.out_dir);
    } else if (optimize->parsed()) {
      const auto config = load(optimize_args);
      status = cdg::harness::command_optimize(config, config.out_dir);
    } else if (ensemble->parsed()) {
      const auto config = load(ensemble_args);
      status = cdg::harness::command_ensemble(config, config.out_dir);
    } else if (landscape->parsed()) {
      const auto config = load(landscape_args);
      status = cdg::harness::command_landscape(config, config.out_dir);
    } else {
      const auto config = load(prob_args);
      status = cdg::harness::command_true_probability(config, config.out_dir,
                                                      load_point(point_path));
    }
    std::cout << status;
    return 0;
  } catch (const cdg::harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
