#pragma once

// Bridges unconstrained optimization variables and the stochastic
// simulators.  A point x lives in R^d (logit space); blockwise softmax maps
// it onto valid directive weights, the simulator runs N times with derived
// per-run seeds, and the objective value is minus the empirical probability
// mass on the selected target events, so minimizing f maximizes coverage.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cdg/coverage.hpp"

namespace cdg {

// Rows of the identity matrix that project the hit-coverage vector onto the
// events being chased.  Indices must be distinct and inside [0, m).
struct TargetSelector {
  std::vector<int> indices;

  void validate(int m) const;
};

// Softmax over one contiguous block, guarded by max subtraction so inputs
// with magnitude up to ~700 stay finite.  Writes `len` weights to `out`.
void softmax_span(const double* x, int len, double* out);

// Maps a 23-entry logit vector onto a valid Template: softmax over the
// instruction, source-register, target-register, and condition-register
// blocks independently.  The all-zeros input yields the uniform template.
Template softmax_blocks(const Eigen::VectorXd& raw);

// n isotropic unit directions in R^d (normalized standard normals).
std::vector<Eigen::VectorXd> sample_directions(int n, int d,
                                               std::uint64_t seed);

// A noisy black-box objective evaluated by Monte-Carlo simulation.  The
// same (x, n_samples, seed) always produces the same value, bit for bit;
// run r of an evaluation uses the sub-seed derive_seed(seed, r), so
// distinct seeds give independent noise.
class NoisyObjective {
 public:
  virtual ~NoisyObjective() = default;

  virtual int dim() const = 0;

  // Minus the average target mass over n_samples simulator runs; in
  // [-|targets|, 0].  Exact zero is returned as +0.0.
  virtual double evaluate(const Eigen::VectorXd& x, long long n_samples,
                          std::uint64_t seed) const = 0;
};

// f(x) = -(1/N) sum of target-event hits of the two-pipe processor model
// under the template softmax_blocks(x).
class NorthStarObjective final : public NoisyObjective {
 public:
  explicit NorthStarObjective(TargetSelector target, int workers = 1);

  int dim() const override { return kTemplateDim; }
  double evaluate(const Eigen::VectorXd& x, long long n_samples,
                  std::uint64_t seed) const override;

  const TargetSelector& target() const { return target_; }

 private:
  TargetSelector target_;
  int workers_;
};

// f(x) = -(1/N) sum of target-bin hits of the multiplication model whose
// bin weights are the softmax of the whole logit vector.
class MultiplicationObjective final : public NoisyObjective {
 public:
  MultiplicationObjective(int bins, TargetSelector target, int workers = 1);

  int dim() const override { return bins_; }
  double evaluate(const Eigen::VectorXd& x, long long n_samples,
                  std::uint64_t seed) const override;

 private:
  int bins_;
  TargetSelector target_;
  int workers_;
};

}  // namespace cdg
