#pragma once

// Three noisy derivative-free optimizers over a NoisyObjective, sharing one
// trace format: implicit filtering (move to the best stencil point, halve
// the stencil on failure), steepest descent driven by ridge/GCV value and
// gradient estimates with a halving line search, and L-BFGS in the same
// framework with a two-loop-recursion direction.
//
// Seed discipline (everything is derived from config.master_seed):
//   estimate e (0-based count of estimation rounds across the run):
//     directions  derive_seed(master, kDirectionTag, e)
//     point i     derive_seed(master, kEvalTag, e, i)
//   Implicit filtering's incumbent evaluation is point i = 0 of its
//   iteration's round; stencil point i uses slot i+1.
// Identical (objective, config) pairs therefore produce bit-identical runs
// regardless of the worker count inside the objective.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdg/gradient_estimator.hpp"

namespace cdg {

class NoisyObjective;

inline constexpr std::uint64_t kDirectionTag = 0x646972;  // "dir"
inline constexpr std::uint64_t kEvalTag = 0x6576616c;     // "eval"

// Line-search acceptance for steepest descent and L-BFGS.  kPseudocode
// accepts (and breaks) only when the proposal both passes the noise test
// phi < phi_old + 2|w| and improves the incumbent best; kNoiseTest breaks
// on the noise test alone, updating the incumbent only when it improves.
enum class LineSearchRule { kPseudocode, kNoiseTest };

struct OptimizerConfig {
  int n_directions = 25;             // n stencil/regression directions
  long long samples_per_point = 25;  // N simulator runs per evaluation
  double step = 5.0;                 // estimation h; initial stencil size
                                     // for implicit filtering
  double h_min = 1e-3;               // implicit-filtering stencil floor
  double mu_init = 10.0;             // initial line-search parameter
  int max_iters = 50;
  int max_ls_iters = 10;             // consecutive failures before ls_break
  int lbfgs_memory = 100;
  std::optional<double> fixed_alpha;  // bypass GCV selection when set
  LineSearchRule line_search_rule = LineSearchRule::kPseudocode;
  std::uint64_t master_seed = 0;
  Eigen::VectorXd t_init;  // start point; empty means the origin

  // Test seam: replaces isotropic direction sampling when set.  Receives
  // (n, d, seed) and must return n directions of unit norm.
  std::function<std::vector<Eigen::VectorXd>(int, int, std::uint64_t)>
      direction_provider;

  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  int ls_iter = 0;        // proposals consumed this iteration (0 for IF)
  double f_star = 0.0;    // best single noisy value sampled this iteration
  double phi_bar = 0.0;   // smoothed value from the iteration's last estimate
  double grad_norm = 0.0;
  double noise_level = 0.0;
  double alpha = 0.0;     // regularization chosen by the last estimate
  double step_param = 0.0;  // h in force (IF) or mu at the last proposal
  bool accepted = false;
  bool noise_pass_no_improve = false;  // passed noise test, not the best test
  double best_so_far = 0.0;  // stored best after the iteration (+inf before
                             // any acceptance; serialized as null)
  long long evals = 0;       // objective evaluations consumed this iteration
  Eigen::VectorXd point;     // incumbent after the iteration
};

struct RunRecord {
  std::string optimizer;  // implicit_filtering | steepest_descent | lbfgs
  std::uint64_t master_seed = 0;
  // Initialization round (steepest descent and L-BFGS estimate once before
  // iterating; implicit filtering has no such round, evals = 0).
  double initial_phi_bar = 0.0;
  double initial_grad_norm = 0.0;
  double initial_noise_level = 0.0;
  long long initial_evals = 0;

  std::vector<IterationRecord> iterations;

  Eigen::VectorXd t_opt;
  double phi_bar_opt = 0.0;  // stored best on exit (+inf if nothing was
                             // ever accepted; serialized as null)
  long long total_evaluations = 0;
  long long total_simulations = 0;  // samples_per_point * total_evaluations
  std::string termination_reason;   // stencil_floor | max_iters | ls_break

  // One JSON object per line: an init record, one record per iteration,
  // and a summary record.  Exact round trip through read_jsonl.
  void write_jsonl(std::ostream& out) const;
  static RunRecord read_jsonl(std::istream& in);
};

RunRecord implicit_filtering(const NoisyObjective& objective,
                             const OptimizerConfig& config);
RunRecord steepest_descent(const NoisyObjective& objective,
                           const OptimizerConfig& config);
RunRecord lbfgs(const NoisyObjective& objective,
                const OptimizerConfig& config);

// L-BFGS curvature history.  push() applies the standard skip rule
// (pairs with s.y <= 1e-12 |s||y| are rejected) and returns whether the
// pair was stored; direction() runs the two-loop recursion against
// H0 = gamma * I with gamma = s.y / y.y of the newest stored pair.
class LbfgsHistory {
 public:
  explicit LbfgsHistory(int memory);

  bool push(const Eigen::VectorXd& s, const Eigen::VectorXd& y);
  Eigen::VectorXd direction(const Eigen::VectorXd& gradient) const;
  double gamma() const;
  int size() const { return static_cast<int>(pairs_.size()); }

 private:
  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  int memory_;
  std::vector<Pair> pairs_;  // oldest first
};

}  // namespace cdg
