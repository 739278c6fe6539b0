#pragma once

// Gradient estimation from noisy directional samples.
//
// A black-box objective sampled at t + h*v_i for unit directions v_i is
// modeled linearly: each sample is intercept + h*v_i'g + noise.  The model
// is fitted by ridge regression toward a prior gradient, with the ridge
// weight chosen by generalized cross validation, so the fit degrades
// gracefully when the samples are mostly noise.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cdg {

class DimensionError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class SingularSystemError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when the GCV denominator trace(I - A(alpha)) vanishes, i.e. the
// model interpolates and cross validation carries no information.
class DegenerateGcvError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Directional sampling design: row i of the matrix is [1, step * v_i'].
struct SampleDesign {
  std::vector<Eigen::VectorXd> directions;
  double step = 0.0;
  Eigen::VectorXd values;

  Eigen::MatrixXd matrix() const;
};

struct GradientEstimate {
  double phi_bar = 0.0;      // fitted intercept: smooth value at the point
  Eigen::VectorXd gradient;  // fitted gradient, length d
  double alpha = 0.0;        // ridge weight used for the fit
  double noise_level = 0.0;  // residual-based noise magnitude estimate

  // [phi_bar; gradient], the raw solution vector of the normal equations.
  Eigen::VectorXd packed() const;
};

struct NoiseModel {
  double sigma = 0.0;               // sampling noise magnitude
  double nonlinear_residual = 0.0;  // mean curvature scale (N-bar)
};

enum class TraceMode { kExact, kHutchinson };

struct GcvOptions {
  TraceMode trace = TraceMode::kExact;
  int probes = 32;  // Hutchinson probe count when trace == kHutchinson
  std::uint64_t probe_seed = 0;
};

struct EstimateOptions {
  double alpha_lo = 1e-8;
  double alpha_hi = 1e8;
  std::optional<double> fixed_alpha;  // bypass GCV selection when set
  GcvOptions gcv;
};

// Builds the n x (d+1) design matrix from unit directions and a step size.
Eigen::MatrixXd build_design(const std::vector<Eigen::VectorXd>& directions,
                             double step);

// Closed-form ridge solution (V'V + alpha I) g = V'f + alpha g0.
// prior has length d+1 (intercept prior first).  alpha == 0 requires a
// nonsingular system and falls back to plain least squares.
GradientEstimate ridge_solve(const Eigen::MatrixXd& design,
                             const Eigen::VectorXd& values, double alpha,
                             const Eigen::VectorXd& prior);

// GCV score |(I - A)(f - V g0)|^2 / trace(I - A)^2 with
// A(alpha) = V (V'V + alpha I)^-1 V'.
double gcv_score(double alpha, const Eigen::MatrixXd& design,
                 const Eigen::VectorXd& values, const Eigen::VectorXd& prior,
                 const GcvOptions& options = {});

// Minimizes the GCV score over [alpha_lo, alpha_hi]: a 17-point log-spaced
// scan followed by golden-section refinement on log10(alpha) to 1e-3.
// Ties prefer the larger (more regularized) alpha.
double select_alpha(const Eigen::MatrixXd& design, const Eigen::VectorXd& values,
                    const Eigen::VectorXd& prior, double alpha_lo = 1e-8,
                    double alpha_hi = 1e8, const GcvOptions& options = {});

// select_alpha + ridge_solve, with the noise level estimated as
// |f - V g| / sqrt(max(1, n - trace A(alpha))).
GradientEstimate estimate(const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& values,
                          const Eigen::VectorXd& prior,
                          const EstimateOptions& options = {});

// (fn(t + h v) - fn(t - h v)) / (2h); exactly two evaluations.
double central_difference(const std::function<double(const Eigen::VectorXd&)>& fn,
                          const Eigen::VectorXd& t, const Eigen::VectorXd& v,
                          double h);

// Step size balancing noise against curvature: (sigma / (2 N-bar))^(1/3).
double optimal_step(const NoiseModel& noise);

}  // namespace cdg
