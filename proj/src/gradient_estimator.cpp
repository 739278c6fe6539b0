#include "cdg/gradient_estimator.hpp"

#include "cdg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cdg {

namespace {

constexpr int kMaxSamples = 512;
constexpr int kMaxDim = 256;
constexpr int kCoarseGridPoints = 17;
constexpr double kLogAlphaTol = 1e-3;

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string("non-finite values in ") + what);
  }
}

void check_problem(const Eigen::MatrixXd& design, const Eigen::VectorXd& values,
                   const Eigen::VectorXd& prior) {
  if (design.rows() == 0 || design.cols() < 2) {
    throw DimensionError("design must be n x (d+1) with n >= 1, d >= 1");
  }
  if (values.size() != design.rows()) {
    throw DimensionError("values length does not match design rows");
  }
  if (prior.size() != design.cols()) {
    throw DimensionError("prior length does not match design columns");
  }
  check_finite(design, "design");
  check_finite(values, "values");
  check_finite(prior, "prior");
}

// Shared SVD-backed machinery: ridge solutions and GCV scores for many
// alphas reuse one factorization of the design.
struct DesignSvd {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd;
  Eigen::VectorXd centered;  // f - V g0
  Eigen::VectorXd coeffs;    // U' (f - V g0)
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  DesignSvd(const Eigen::MatrixXd& design, const Eigen::VectorXd& values,
            const Eigen::VectorXd& prior)
      : svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV),
        rows(design.rows()),
        cols(design.cols()) {
    centered = values - design * prior;
    coeffs = svd.matrixU().transpose() * centered;
  }

  double trace_smoother(double alpha) const {
    const auto& s = svd.singularValues();
    double tr = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double s2 = s[i] * s[i];
      if (s2 > 0.0 || alpha > 0.0) tr += s2 / (s2 + alpha);
    }
    return tr;
  }

  double trace_smoother_hutchinson(double alpha, int probes,
                                   std::uint64_t seed) const {
    if (probes <= 0) throw std::invalid_argument("probe count must be positive");
    auto rng = make_rng(derive_seed(seed, 0x6763767472616365ull));
    const auto& s = svd.singularValues();
    const auto& u = svd.matrixU();
    double acc = 0.0;
    Eigen::VectorXd z(rows);
    for (int p = 0; p < probes; ++p) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        z[i] = (rng() & 1ull) ? 1.0 : -1.0;
      }
      const Eigen::VectorXd y = u.transpose() * z;
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        const double s2 = s[i] * s[i];
        if (s2 > 0.0 || alpha > 0.0) acc += s2 / (s2 + alpha) * y[i] * y[i];
      }
    }
    return acc / probes;
  }

  // Ridge solution expressed through the SVD; exact for alpha >= 0 and
  // numerically preferable to forming V'V.
  Eigen::VectorXd solve(double alpha, const Eigen::VectorXd& prior) const {
    const auto& s = svd.singularValues();
    if (alpha == 0.0) {
      const double smax = s.size() > 0 ? s[0] : 0.0;
      const double tol = std::numeric_limits<double>::epsilon() *
                         static_cast<double>(std::max(rows, cols)) * smax;
      if (rows < cols || s.size() < cols || s[s.size() - 1] <= tol) {
        throw SingularSystemError("singular system at alpha = 0");
      }
    }
    Eigen::VectorXd filtered(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double s2 = s[i] * s[i];
      filtered[i] = (s2 > 0.0 || alpha > 0.0) ? s[i] / (s2 + alpha) * coeffs[i] : 0.0;
    }
    return prior + svd.matrixV() * filtered;
  }

  double gcv(double alpha, const GcvOptions& options) const {
    const auto& s = svd.singularValues();
    // |(I - A) r|^2 = |r - U D U' r|^2 with D_ii = s_i^2 / (s_i^2 + alpha).
    Eigen::VectorXd shrunk(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double s2 = s[i] * s[i];
      shrunk[i] = (s2 > 0.0 || alpha > 0.0) ? s2 / (s2 + alpha) * coeffs[i] : 0.0;
    }
    const double numerator = (centered - svd.matrixU() * shrunk).squaredNorm();
    const double trace_a =
        options.trace == TraceMode::kExact
            ? trace_smoother(alpha)
            : trace_smoother_hutchinson(alpha, options.probes, options.probe_seed);
    const double denom = static_cast<double>(rows) - trace_a;
    if (denom <= 1e-9 * static_cast<double>(rows)) {
      throw DegenerateGcvError("trace(I - A) vanished; GCV is degenerate");
    }
    return numerator / (denom * denom);
  }
};

GradientEstimate make_estimate(const DesignSvd& ds, double alpha,
                               const Eigen::VectorXd& prior,
                               const Eigen::MatrixXd& design,
                               const Eigen::VectorXd& values) {
  const Eigen::VectorXd g = ds.solve(alpha, prior);
  GradientEstimate est;
  est.phi_bar = g[0];
  est.gradient = g.tail(g.size() - 1);
  est.alpha = alpha;
  const double dof = std::max(1.0, static_cast<double>(ds.rows) - ds.trace_smoother(alpha));
  est.noise_level = (values - design * g).norm() / std::sqrt(dof);
  return est;
}

}  // namespace

Eigen::MatrixXd SampleDesign::matrix() const { return build_design(directions, step); }

Eigen::VectorXd GradientEstimate::packed() const {
  Eigen::VectorXd out(gradient.size() + 1);
  out[0] = phi_bar;
  out.tail(gradient.size()) = gradient;
  return out;
}

Eigen::MatrixXd build_design(const std::vector<Eigen::VectorXd>& directions,
                             double step) {
  if (directions.empty()) throw DimensionError("no directions");
  const Eigen::Index d = directions.front().size();
  if (d < 1) throw DimensionError("directions must have dimension >= 1");
  if (d > kMaxDim) throw DimensionError("direction dimension exceeds 256");
  if (directions.size() > kMaxSamples) {
    throw DimensionError("more than 512 directions");
  }
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw std::invalid_argument("step must be positive and finite");
  }
  Eigen::MatrixXd design(static_cast<Eigen::Index>(directions.size()), d + 1);
  for (std::size_t i = 0; i < directions.size(); ++i) {
    const auto& v = directions[i];
    if (v.size() != d) throw DimensionError("directions have mixed dimensions");
    if (!v.allFinite()) throw std::invalid_argument("non-finite direction");
    if (std::abs(v.norm() - 1.0) > 1e-8) {
      throw std::invalid_argument("directions must have unit norm");
    }
    design(static_cast<Eigen::Index>(i), 0) = 1.0;
    design.row(static_cast<Eigen::Index>(i)).tail(d) = step * v.transpose();
  }
  return design;
}

GradientEstimate ridge_solve(const Eigen::MatrixXd& design,
                             const Eigen::VectorXd& values, double alpha,
                             const Eigen::VectorXd& prior) {
  check_problem(design, values, prior);
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("alpha must be finite and >= 0");
  }
  const DesignSvd ds(design, values, prior);
  return make_estimate(ds, alpha, prior, design, values);
}

double gcv_score(double alpha, const Eigen::MatrixXd& design,
                 const Eigen::VectorXd& values, const Eigen::VectorXd& prior,
                 const GcvOptions& options) {
  check_problem(design, values, prior);
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("alpha must be finite and >= 0");
  }
  const DesignSvd ds(design, values, prior);
  return ds.gcv(alpha, options);
}

double select_alpha(const Eigen::MatrixXd& design, const Eigen::VectorXd& values,
                    const Eigen::VectorXd& prior, double alpha_lo, double alpha_hi,
                    const GcvOptions& options) {
  check_problem(design, values, prior);
  if (!(alpha_lo > 0.0) || !(alpha_hi > alpha_lo) || !std::isfinite(alpha_hi)) {
    throw std::invalid_argument("need 0 < alpha_lo < alpha_hi < inf");
  }
  const DesignSvd ds(design, values, prior);

  double best_alpha = alpha_hi;
  double best_score = std::numeric_limits<double>::infinity();
  // Candidates whose smoother interpolates the data (possible at small
  // alpha when there are no more samples than parameters) are skipped
  // rather than propagated: some admissible alpha almost always exists
  // further right on the grid.
  const auto consider = [&](double log_alpha) {
    const double alpha = std::pow(10.0, log_alpha);
    double score;
    try {
      score = ds.gcv(alpha, options);
    } catch (const DegenerateGcvError&) {
      return std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(score)) {
      throw std::invalid_argument("non-finite GCV score during selection");
    }
    // Ties prefer the more regularized end.
    if (score < best_score || (score == best_score && alpha > best_alpha)) {
      best_score = score;
      best_alpha = alpha;
    }
    return score;
  };

  const double lo = std::log10(alpha_lo);
  const double hi = std::log10(alpha_hi);
  int best_idx = 0;
  double best_grid = std::numeric_limits<double>::infinity();
  double grid[kCoarseGridPoints];
  for (int i = 0; i < kCoarseGridPoints; ++i) {
    grid[i] = lo + (hi - lo) * i / (kCoarseGridPoints - 1);
    const double score = consider(grid[i]);
    if (score <= best_grid) {  // ties move right, toward larger alpha
      best_grid = score;
      best_idx = i;
    }
  }

  double a = grid[std::max(0, best_idx - 1)];
  double b = grid[std::min(kCoarseGridPoints - 1, best_idx + 1)];
  constexpr double kInvPhi = 0.6180339887498948482;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = consider(x1);
  double f2 = consider(x2);
  while (b - a > kLogAlphaTol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = consider(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = consider(x2);
    }
  }
  if (!std::isfinite(best_score)) {
    throw DegenerateGcvError(
        "GCV is degenerate over the whole alpha range; "
        "add samples or widen the range");
  }
  return best_alpha;
}

GradientEstimate estimate(const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& values,
                          const Eigen::VectorXd& prior,
                          const EstimateOptions& options) {
  check_problem(design, values, prior);
  double alpha;
  if (options.fixed_alpha) {
    alpha = *options.fixed_alpha;
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
      throw std::invalid_argument("fixed alpha must be finite and >= 0");
    }
  } else {
    alpha = select_alpha(design, values, prior, options.alpha_lo, options.alpha_hi,
                         options.gcv);
  }
  const DesignSvd ds(design, values, prior);
  return make_estimate(ds, alpha, prior, design, values);
}

double central_difference(const std::function<double(const Eigen::VectorXd&)>& fn,
                          const Eigen::VectorXd& t, const Eigen::VectorXd& v,
                          double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("step must be positive and finite");
  }
  if (t.size() != v.size()) throw DimensionError("point/direction size mismatch");
  return (fn(t + h * v) - fn(t - h * v)) / (2.0 * h);
}

double optimal_step(const NoiseModel& noise) {
  if (!(noise.nonlinear_residual > 0.0)) {
    throw std::invalid_argument("nonlinear residual must be positive");
  }
  if (!(noise.sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  return std::cbrt(noise.sigma / (2.0 * noise.nonlinear_residual));
}

}  // namespace cdg
