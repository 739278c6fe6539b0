#pragma once

// Experiment drivers on top of the optimizers and simulators: random
// template exploration, single optimization runs with human-readable
// iteration tables, seeded ensembles with per-cell statistics, 2-D
// landscape slices, and high-precision reference-probability estimation.
//
// Every run's randomness derives from (master_seed, intrinsic ids): an
// ensemble run is seeded by (cell's N, cell's n, run index), never by
// execution order, so cell permutations and worker counts cannot change a
// single emitted number.  The command_* wrappers add artifact writing; the
// run_* functions are pure compute.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdg/harness/config.hpp"
#include "cdg/objective.hpp"
#include "cdg/optimizers.hpp"

namespace cdg::harness {

inline constexpr std::uint64_t kCellTag = 0x63656c6c;      // "cell"
inline constexpr std::uint64_t kReferenceTag = 0x726566;   // "ref"
inline constexpr std::uint64_t kTemplateTag = 0x74706c;    // "tpl"
inline constexpr std::uint64_t kExploreRunTag = 0x657270;  // "erp"
inline constexpr std::uint64_t kGridDirTag = 0x676469;     // "gdi"
inline constexpr std::uint64_t kGridEvalTag = 0x676576;    // "gev"

// Objective described by the config's simulator section; empty target
// defaults to the processor's hard event or the multiplication top bin.
std::unique_ptr<NoisyObjective> make_objective(const ExperimentConfig& config,
                                               int workers);

// Empirical target mass at the raw (pre-softmax) point under a large fixed
// sample count; exact +0.0 when no reference run hits the target.
double true_probability(const NoisyObjective& objective,
                        const Eigen::VectorXd& raw, long long reference_samples,
                        std::uint64_t seed);

struct ExploreResult {
  long long templates = 0;
  long long runs_per_template = 1;
  long long total_runs = 0;
  std::vector<long long> hits;           // per event, summed over all runs
  std::vector<long long> best_hits;      // best single-template hit count
  std::vector<long long> best_template;  // its template index, -1 if unhit
  int hardest_event = -1;                // fewest hits among hit events
  int unhit_events = 0;

  double best_rate(int event) const;  // best_hits / runs_per_template
};

ExploreResult run_explore(const ExperimentConfig& config);
std::string render_explore_csv(const ExploreResult& result,
                               const ExperimentConfig& config);
std::string render_explore_summary(const ExploreResult& result,
                                   const ExperimentConfig& config);

struct OptimizeResult {
  RunRecord record;
  std::vector<double> p_iteration;  // reference probability per iteration
  double p_final = 0.0;             // reference probability at t_opt
};

OptimizeResult run_optimize(const ExperimentConfig& config);
// Iteration table plus the final summary (decoded directive weights for
// the processor model, total simulations, best smoothed value, reference
// probability).
std::string render_iteration_table(const OptimizeResult& result,
                                   const ExperimentConfig& config);

struct CellStats {
  int samples_per_point = 0;  // N
  int directions = 0;         // n
  double mean_iters = 0.0;
  double var_iters = 0.0;
  double mean_phi_opt = 0.0;
  double var_phi_opt = 0.0;
  double mean_p_opt = 0.0;
  double var_p_opt = 0.0;
  double max_p_opt = 0.0;
  int failures = 0;  // runs whose reference probability is exactly zero
  int runs = 0;
};

struct EnsembleResult {
  std::vector<CellStats> cells;
  std::vector<std::vector<RunRecord>> records;  // [cell][run]
  std::vector<std::vector<double>> p_opt;       // [cell][run] reference prob
};

EnsembleResult run_ensemble(const ExperimentConfig& config);

// Comma-delimited stats with the fixed header
// N,n,mean_iters,var_iters,mean_phi_opt,var_phi_opt,mean_p_opt,var_p_opt,
// max_p_opt,failures,runs; floats use shortest round-trip notation and
// parse_stats_csv restores them exactly.
std::string render_stats_csv(const std::vector<CellStats>& cells);
std::vector<CellStats> parse_stats_csv(const std::string& text);
std::string render_stats_table(const std::vector<CellStats>& cells,
                               const ExperimentConfig& config);

struct LandscapeResult {
  Eigen::VectorXd y1, y2;       // the two slice directions
  std::vector<double> offsets;  // per-axis grid coordinates
  Eigen::MatrixXd values;       // values(i, j) = f(center + u_i y1 + v_j y2)
};

LandscapeResult run_landscape(const ExperimentConfig& config);
std::string render_grid_csv(const LandscapeResult& result);
LandscapeResult parse_grid_csv(const std::string& text);

// Artifact-writing wrappers used by the command-line tool.  Each writes a
// canonical config snapshot plus its own outputs into `dir` and returns a
// short human-readable status line.
std::string command_explore(const ExperimentConfig& config,
                            const std::string& dir);
std::string command_optimize(const ExperimentConfig& config,
                             const std::string& dir);
std::string command_ensemble(const ExperimentConfig& config,
                             const std::string& dir);
std::string command_landscape(const ExperimentConfig& config,
                              const std::string& dir);
std::string command_true_probability(const ExperimentConfig& config,
                                     const std::string& dir,
                                     const Eigen::VectorXd& raw);

}  // namespace cdg::harness
