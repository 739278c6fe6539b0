#include "cdg/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "cdg/objective.hpp"
#include "cdg/rng.hpp"

namespace cdg {
namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd start_point(const NoisyObjective& objective,
                            const OptimizerConfig& config) {
  if (config.t_init.size() == 0)
    return Eigen::VectorXd::Zero(objective.dim());
  if (config.t_init.size() != objective.dim())
    throw DimensionError("start point dimension does not match the objective");
  return config.t_init;
}

std::vector<Eigen::VectorXd> round_directions(const OptimizerConfig& config,
                                              int d, std::uint64_t round) {
  const std::uint64_t seed = derive_seed(config.master_seed, kDirectionTag, round);
  auto dirs = config.direction_provider
                  ? config.direction_provider(config.n_directions, d, seed)
                  : sample_directions(config.n_directions, d, seed);
  if (static_cast<int>(dirs.size()) != config.n_directions)
    throw std::invalid_argument("direction provider returned a wrong count");
  return dirs;
}

// The ridge prior anchors the gradient block at the warm-started gradient
// and the intercept at the sample mean, so heavy regularization collapses
// toward "value = what we just measured, slope = what we saw last time"
// instead of toward zero.
GradientEstimate fit_round(const std::vector<Eigen::VectorXd>& directions,
                           double h, const Eigen::VectorXd& values,
                           const Eigen::VectorXd& warm_gradient,
                           const OptimizerConfig& config) {
  const auto d = warm_gradient.size();
  Eigen::VectorXd prior(d + 1);
  prior(0) = values.mean();
  prior.tail(d) = warm_gradient;
  EstimateOptions options;
  options.fixed_alpha = config.fixed_alpha;
  return estimate(build_design(directions, h), values, prior, options);
}

struct Round {
  GradientEstimate est;
  double f_star = kInf;  // lowest sampled value in the round
  long long evals = 0;
};

// One estimation round for the gradient-driven optimizers: sample the
// objective at t + h v_i over fresh directions, fit the linear model.
// Evaluation i of round r draws its noise from (kEvalTag, r, i).
Round estimate_round(const NoisyObjective& objective,
                     const OptimizerConfig& config, const Eigen::VectorXd& t,
                     const Eigen::VectorXd& warm_gradient, std::uint64_t round) {
  const int n = config.n_directions;
  const auto dirs = round_directions(config, objective.dim(), round);
  Round out;
  Eigen::VectorXd values(n);
  for (int i = 0; i < n; ++i) {
    const std::uint64_t seed =
        derive_seed(config.master_seed, kEvalTag, round,
                    static_cast<std::uint64_t>(i));
    values(i) = objective.evaluate(t + config.step * dirs[i],
                                   config.samples_per_point, seed);
    out.f_star = std::min(out.f_star, values(i));
  }
  out.evals = n;
  out.est = fit_round(dirs, config.step, values, warm_gradient, config);
  return out;
}

// Shared body of steepest_descent and lbfgs: an outer loop of line searches
// over proposals t_old - mu * direction, where the direction is the raw
// gradient estimate or the two-loop-recursion product.  A proposal is
// accepted when its smoothed value passes the noise test
// phi < phi_old + 2 * noise and (under the default rule) improves on the
// best accepted value; otherwise mu halves, and the run ends after
// max_ls_iters consecutive failures.
RunRecord descent_run(const NoisyObjective& objective,
                      const OptimizerConfig& config, bool use_lbfgs) {
  config.validate();
  const int d = objective.dim();

  RunRecord rec;
  rec.optimizer = use_lbfgs ? "lbfgs" : "steepest_descent";
  rec.master_seed = config.master_seed;

  Eigen::VectorXd t = start_point(objective, config);
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(d);

  std::uint64_t round = 0;
  const Round init = estimate_round(objective, config, t, warm, round);
  warm = init.est.gradient;
  rec.initial_phi_bar = init.est.phi_bar;
  rec.initial_grad_norm = init.est.gradient.norm();
  rec.initial_noise_level = init.est.noise_level;
  rec.initial_evals = init.evals;
  rec.total_evaluations = init.evals;

  double phi = init.est.phi_bar;
  Eigen::VectorXd g = init.est.gradient;

  Eigen::VectorXd t_opt = t;
  double phi_opt = kInf;
  double mu = config.mu_init;
  LbfgsHistory history(config.lbfgs_memory);

  bool ls_break = false;
  int iter = 0;
  while (true) {
    ++iter;
    const Eigen::VectorXd t_old = t;
    const double phi_old = phi;
    const Eigen::VectorXd g_old = g;
    const Eigen::VectorXd dir = use_lbfgs ? history.direction(g_old) : g_old;
    if (use_lbfgs) mu = 1.0;  // backtracking restarts at 1 each iteration

    IterationRecord it;
    it.iter = iter;
    it.f_star = kInf;
    int ls_iter = 1;
    bool accepted = false;
    while (true) {
      const Eigen::VectorXd t_prop = t_old - mu * dir;
      ++round;
      const Round r = estimate_round(objective, config, t_prop, warm, round);
      warm = r.est.gradient;
      rec.total_evaluations += r.evals;
      it.evals += r.evals;
      it.ls_iter = ls_iter;
      it.f_star = std::min(it.f_star, r.f_star);
      it.phi_bar = r.est.phi_bar;
      it.grad_norm = r.est.gradient.norm();
      it.noise_level = r.est.noise_level;
      it.alpha = r.est.alpha;
      it.step_param = mu;

      const bool noise_pass = r.est.phi_bar < phi_old + 2.0 * r.est.noise_level;
      const bool improves = r.est.phi_bar < phi_opt;
      if (noise_pass &&
          (improves || config.line_search_rule == LineSearchRule::kNoiseTest)) {
        if (use_lbfgs) history.push(t_prop - t_old, r.est.gradient - g_old);
        t = t_prop;
        if (improves) {
          t_opt = t_prop;
          phi_opt = r.est.phi_bar;
        }
        phi = r.est.phi_bar;
        g = r.est.gradient;
        accepted = true;
        // A long jump makes the warm-started prior stale.
        if ((t_prop - t_old).norm() > 10.0 * config.step) warm.setZero();
        break;
      }
      if (noise_pass) it.noise_pass_no_improve = true;
      mu /= 2.0;
      ++ls_iter;
      if (ls_iter > config.max_ls_iters) {
        ls_break = true;
        break;
      }
    }

    it.accepted = accepted;
    it.best_so_far = phi_opt;
    it.point = t;
    const bool first_try = it.ls_iter == 1;
    rec.iterations.push_back(std::move(it));

    if (!use_lbfgs && accepted && first_try) mu *= 2.0;
    if (ls_break) {
      rec.termination_reason = "ls_break";
      break;
    }
    if (iter >= config.max_iters) {
      rec.termination_reason = "max_iters";
      break;
    }
  }

  rec.t_opt = t_opt;
  rec.phi_bar_opt = phi_opt;
  rec.total_simulations = config.samples_per_point * rec.total_evaluations;
  return rec;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

double inf_if_null(const json& j) {
  return j.is_null() ? kInf : j.get<double>();
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  Eigen::Index i = 0;
  for (const auto& x : arr) v(i++) = x.get<double>();
  return v;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (n_directions < 1)
    throw std::invalid_argument("n_directions must be >= 1");
  if (samples_per_point < 1)
    throw std::invalid_argument("samples_per_point must be >= 1");
  if (!(step > 0.0)) throw std::invalid_argument("step must be > 0");
  if (!(h_min > 0.0)) throw std::invalid_argument("h_min must be > 0");
  if (!(mu_init > 0.0)) throw std::invalid_argument("mu_init must be > 0");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (max_ls_iters < 1)
    throw std::invalid_argument("max_ls_iters must be >= 1");
  if (lbfgs_memory < 1)
    throw std::invalid_argument("lbfgs_memory must be >= 1");
  if (fixed_alpha && !(*fixed_alpha >= 0.0))
    throw std::invalid_argument("fixed_alpha must be >= 0");
}

RunRecord implicit_filtering(const NoisyObjective& objective,
                             const OptimizerConfig& config) {
  config.validate();
  const int d = objective.dim();

  RunRecord rec;
  rec.optimizer = "implicit_filtering";
  rec.master_seed = config.master_seed;
  rec.termination_reason = "max_iters";

  Eigen::VectorXd t = start_point(objective, config);
  Eigen::VectorXd t_opt = t;
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(d);
  double h = config.step;
  double f_opt = kInf;

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    // Round k owns evaluation slots: 0 for the incumbent, i+1 for stencil
    // point i, so traces are reproducible point by point.
    const auto round = static_cast<std::uint64_t>(iter);
    const auto dirs = round_directions(config, d, round);
    const double f_inc =
        objective.evaluate(t, config.samples_per_point,
                           derive_seed(config.master_seed, kEvalTag, round,
                                       static_cast<std::uint64_t>(0)));
    Eigen::VectorXd values(config.n_directions);
    int best_i = 0;
    for (int i = 0; i < config.n_directions; ++i) {
      values(i) = objective.evaluate(
          t + h * dirs[i], config.samples_per_point,
          derive_seed(config.master_seed, kEvalTag, round,
                      static_cast<std::uint64_t>(i + 1)));
      if (values(i) < values(best_i)) best_i = i;
    }
    // The fit is for reporting the smoothed value; moves are decided on
    // raw sampled values.
    const GradientEstimate est = fit_round(dirs, h, values, warm, config);
    warm = est.gradient;

    IterationRecord it;
    it.iter = iter;
    it.ls_iter = 0;
    it.f_star = std::min(f_inc, values(best_i));
    it.phi_bar = est.phi_bar;
    it.grad_norm = est.gradient.norm();
    it.noise_level = est.noise_level;
    it.alpha = est.alpha;
    it.step_param = h;
    it.evals = config.n_directions + 1;
    rec.total_evaluations += it.evals;

    const bool accept = values(best_i) < f_opt;
    if (accept) {
      t += h * dirs[best_i];
      t_opt = t;
      f_opt = values(best_i);
    }
    it.accepted = accept;
    it.best_so_far = f_opt;
    it.point = t;
    rec.iterations.push_back(std::move(it));

    if (!accept) {
      h /= 2.0;
      if (h < config.h_min) {
        rec.termination_reason = "stencil_floor";
        break;
      }
    }
  }

  rec.t_opt = t_opt;
  rec.phi_bar_opt = f_opt;
  rec.total_simulations = config.samples_per_point * rec.total_evaluations;
  return rec;
}

RunRecord steepest_descent(const NoisyObjective& objective,
                           const OptimizerConfig& config) {
  return descent_run(objective, config, false);
}

RunRecord lbfgs(const NoisyObjective& objective,
                const OptimizerConfig& config) {
  return descent_run(objective, config, true);
}

LbfgsHistory::LbfgsHistory(int memory) : memory_(memory) {
  if (memory < 1) throw std::invalid_argument("lbfgs memory must be >= 1");
}

bool LbfgsHistory::push(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
  const double sy = s.dot(y);
  if (sy <= 1e-12 * s.norm() * y.norm()) return false;
  if (static_cast<int>(pairs_.size()) == memory_) pairs_.erase(pairs_.begin());
  pairs_.push_back({s, y, 1.0 / sy});
  return true;
}

double LbfgsHistory::gamma() const {
  if (pairs_.empty()) return 1.0;
  const Pair& p = pairs_.back();
  return p.s.dot(p.y) / p.y.dot(p.y);
}

Eigen::VectorXd LbfgsHistory::direction(const Eigen::VectorXd& gradient) const {
  Eigen::VectorXd q = gradient;
  const int k = size();
  std::vector<double> a(static_cast<std::size_t>(k));
  for (int i = k - 1; i >= 0; --i) {
    a[i] = pairs_[i].rho * pairs_[i].s.dot(q);
    q -= a[i] * pairs_[i].y;
  }
  q *= gamma();
  for (int i = 0; i < k; ++i) {
    const double b = pairs_[i].rho * pairs_[i].y.dot(q);
    q += (a[i] - b) * pairs_[i].s;
  }
  return q;
}

void RunRecord::write_jsonl(std::ostream& out) const {
  json init;
  init["type"] = "init";
  init["optimizer"] = optimizer;
  init["master_seed"] = master_seed;
  init["phi_bar"] = initial_phi_bar;
  init["grad_norm"] = initial_grad_norm;
  init["noise_level"] = initial_noise_level;
  init["evals"] = initial_evals;
  out << init.dump() << '\n';

  for (const IterationRecord& it : iterations) {
    json j;
    j["type"] = "iteration";
    j["iter"] = it.iter;
    j["ls_iter"] = it.ls_iter;
    j["f_star"] = finite_or_null(it.f_star);
    j["phi_bar"] = it.phi_bar;
    j["grad_norm"] = it.grad_norm;
    j["noise_level"] = it.noise_level;
    j["alpha"] = it.alpha;
    j["step_param"] = it.step_param;
    j["accepted"] = it.accepted;
    j["noise_pass_no_improve"] = it.noise_pass_no_improve;
    j["best_so_far"] = finite_or_null(it.best_so_far);
    j["evals"] = it.evals;
    j["point"] = vector_to_json(it.point);
    out << j.dump() << '\n';
  }

  json fin;
  fin["type"] = "summary";
  fin["t_opt"] = vector_to_json(t_opt);
  fin["phi_bar_opt"] = finite_or_null(phi_bar_opt);
  fin["total_evaluations"] = total_evaluations;
  fin["total_simulations"] = total_simulations;
  fin["termination_reason"] = termination_reason;
  out << fin.dump() << '\n';
}

RunRecord RunRecord::read_jsonl(std::istream& in) {
  RunRecord rec;
  bool saw_init = false;
  bool saw_summary = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "init") {
      saw_init = true;
      rec.optimizer = j.at("optimizer").get<std::string>();
      rec.master_seed = j.at("master_seed").get<std::uint64_t>();
      rec.initial_phi_bar = j.at("phi_bar").get<double>();
      rec.initial_grad_norm = j.at("grad_norm").get<double>();
      rec.initial_noise_level = j.at("noise_level").get<double>();
      rec.initial_evals = j.at("evals").get<long long>();
    } else if (type == "iteration") {
      IterationRecord it;
      it.iter = j.at("iter").get<int>();
      it.ls_iter = j.at("ls_iter").get<int>();
      it.f_star = inf_if_null(j.at("f_star"));
      it.phi_bar = j.at("phi_bar").get<double>();
      it.grad_norm = j.at("grad_norm").get<double>();
      it.noise_level = j.at("noise_level").get<double>();
      it.alpha = j.at("alpha").get<double>();
      it.step_param = j.at("step_param").get<double>();
      it.accepted = j.at("accepted").get<bool>();
      it.noise_pass_no_improve = j.at("noise_pass_no_improve").get<bool>();
      it.best_so_far = inf_if_null(j.at("best_so_far"));
      it.evals = j.at("evals").get<long long>();
      it.point = vector_from_json(j.at("point"));
      rec.iterations.push_back(std::move(it));
    } else if (type == "summary") {
      saw_summary = true;
      rec.t_opt = vector_from_json(j.at("t_opt"));
      rec.phi_bar_opt = inf_if_null(j.at("phi_bar_opt"));
      rec.total_evaluations = j.at("total_evaluations").get<long long>();
      rec.total_simulations = j.at("total_simulations").get<long long>();
      rec.termination_reason = j.at("termination_reason").get<std::string>();
    } else {
      throw std::runtime_error("unknown run-record line type: " + type);
    }
  }
  if (!saw_init || !saw_summary)
    throw std::runtime_error("run-record log is missing init or summary line");
  return rec;
}

}  // namespace cdg
