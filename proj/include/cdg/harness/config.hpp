#pragma once

// Experiment configuration: one JSON document with nested sections per
// concern (simulator, optimizer, ensemble, explore, landscape).  Parsing is
// strict: an unknown key anywhere, a wrong type, or an out-of-range value
// is a ConfigError naming the offending field, because a silently ignored
// typo would corrupt a whole ensemble study.  render_config emits a
// canonical document that parses back to an identical configuration.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cdg/optimizers.hpp"

namespace cdg::harness {

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SimulatorKind { kNorthStar, kMultiplication };
enum class OptimizerKind { kImplicitFiltering, kSteepestDescent, kLbfgs };

struct SimulatorSpec {
  SimulatorKind kind = SimulatorKind::kNorthStar;
  int bins = 100;           // multiplication table size k
  std::vector<int> target;  // event / bin indices; empty selects the
                            // processor's hard event or the top bin
};

struct EnsembleSpec {
  int runs = 25;
  long long budget = 625;                  // per-iteration simulations N*n
  std::vector<std::pair<int, int>> cells;  // (N, n) pairs
};

struct ExploreSpec {
  long long templates = 5000;
  long long runs_per_template = 1;
};

struct LandscapeSpec {
  double extent = 50.0;  // grid spans [-extent, extent] on both axes
  int points = 21;       // grid points per axis
  long long samples = 100;
  Eigen::VectorXd center;  // empty means the origin (uniform template)
};

struct ExperimentConfig {
  SimulatorSpec simulator;
  OptimizerKind optimizer = OptimizerKind::kSteepestDescent;
  OptimizerConfig opt;  // master_seed is mirrored from the top level
  EnsembleSpec ensemble;
  ExploreSpec explore;
  LandscapeSpec landscape;
  long long reference_samples = 100000;
  int workers = 0;  // 0 defers to CDG_WORKERS, then hardware
  std::uint64_t master_seed = 1;
  std::string out_dir = "out";

  void validate() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string render_config(const ExperimentConfig& config);

const char* simulator_name(SimulatorKind kind);
const char* optimizer_name(OptimizerKind kind);

}  // namespace cdg::harness
