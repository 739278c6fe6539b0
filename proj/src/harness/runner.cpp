#include "cdg/harness/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cdg/coverage.hpp"
#include "cdg/multiplication_model.hpp"
#include "cdg/northstar.hpp"
#include "cdg/parallel.hpp"
#include "cdg/rng.hpp"

namespace cdg::harness {
namespace {

// Shortest decimal form that parses back to the identical double.
std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("bad numeric field '" + std::string(s) + "'");
  return v;
}

long long parse_int(std::string_view s) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("bad integer field '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string fixed(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string compact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::vector<int> effective_target(const ExperimentConfig& config) {
  if (!config.simulator.target.empty()) return config.simulator.target;
  if (config.simulator.kind == SimulatorKind::kNorthStar)
    return {event_index(hard_event())};
  return {config.simulator.bins - 1};
}

std::string probability_label(const ExperimentConfig& config) {
  const std::vector<int> target = effective_target(config);
  if (config.simulator.kind == SimulatorKind::kNorthStar &&
      target == std::vector<int>{event_index(hard_event())})
    return "p(c_hard)";
  return "p(target)";
}

RunRecord run_optimizer(OptimizerKind kind, const NoisyObjective& objective,
                        const OptimizerConfig& config) {
  switch (kind) {
    case OptimizerKind::kImplicitFiltering:
      return implicit_filtering(objective, config);
    case OptimizerKind::kSteepestDescent:
      return steepest_descent(objective, config);
    default:
      return lbfgs(objective, config);
  }
}

std::pair<double, double> mean_and_variance(const std::vector<double>& xs) {
  const auto n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, ss / (n - 1.0)};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void pad(std::ostream& out, const std::string& cell, int width) {
  out << std::setw(width) << cell;
}

}  // namespace

std::unique_ptr<NoisyObjective> make_objective(const ExperimentConfig& config,
                                               int workers) {
  TargetSelector target{effective_target(config)};
  if (config.simulator.kind == SimulatorKind::kNorthStar)
    return std::make_unique<NorthStarObjective>(target, workers);
  return std::make_unique<MultiplicationObjective>(config.simulator.bins,
                                                   target, workers);
}

double true_probability(const NoisyObjective& objective,
                        const Eigen::VectorXd& raw, long long reference_samples,
                        std::uint64_t seed) {
  const double p = -objective.evaluate(raw, reference_samples, seed);
  return p == 0.0 ? 0.0 : p;  // avoid -0.0
}

double ExploreResult::best_rate(int event) const {
  return static_cast<double>(best_hits[static_cast<std::size_t>(event)]) /
         static_cast<double>(runs_per_template);
}

ExploreResult run_explore(const ExperimentConfig& config) {
  config.validate();
  const bool northstar = config.simulator.kind == SimulatorKind::kNorthStar;
  const int events = northstar ? kNorthStarEvents : config.simulator.bins;

  ExploreResult result;
  result.templates = config.explore.templates;
  result.runs_per_template = config.explore.runs_per_template;
  result.total_runs = result.templates * result.runs_per_template;
  result.hits.assign(static_cast<std::size_t>(events), 0);
  result.best_hits.assign(static_cast<std::size_t>(events), 0);
  result.best_template.assign(static_cast<std::size_t>(events), -1);

  struct Accumulator {
    std::vector<long long> hits, best_hits, best_template;
  };
  const int workers = resolve_workers(config.workers);
  std::vector<Accumulator> accumulators(static_cast<std::size_t>(workers));
  for (auto& a : accumulators) {
    a.hits.assign(static_cast<std::size_t>(events), 0);
    a.best_hits.assign(static_cast<std::size_t>(events), 0);
    a.best_template.assign(static_cast<std::size_t>(events), -1);
  }

  parallel_chunks(result.templates, workers, [&](int chunk, long long begin,
                                                 long long end) {
    Accumulator& acc = accumulators[static_cast<std::size_t>(chunk)];
    const MultiplicationModel model(config.simulator.bins);
    std::vector<long long> counts(static_cast<std::size_t>(events));
    for (long long t = begin; t < end; ++t) {
      auto rng = make_rng(derive_seed(config.master_seed, kTemplateTag,
                                      static_cast<std::uint64_t>(t)));
      std::fill(counts.begin(), counts.end(), 0);
      if (northstar) {
        const CompiledTemplate compiled(sample_dirichlet_template(rng));
        std::uint8_t bits[kNorthStarEvents];
        for (long long r = 0; r < result.runs_per_template; ++r) {
          std::fill(bits, bits + kNorthStarEvents, 0);
          compiled.run_bits(derive_seed(config.master_seed, kExploreRunTag,
                                        static_cast<std::uint64_t>(t),
                                        static_cast<std::uint64_t>(r)),
                            bits);
          for (int e = 0; e < events; ++e) counts[e] += bits[e];
        }
      } else {
        const std::vector<double> weights =
            sample_dirichlet_uniform(config.simulator.bins, rng);
        for (long long r = 0; r < result.runs_per_template; ++r) {
          const HitCoverage hc =
              model.run(weights, derive_seed(config.master_seed, kExploreRunTag,
                                             static_cast<std::uint64_t>(t),
                                             static_cast<std::uint64_t>(r)));
          for (int e = 0; e < events; ++e) counts[e] += hc.bits[e];
        }
      }
      for (int e = 0; e < events; ++e) {
        acc.hits[e] += counts[e];
        if (counts[e] > acc.best_hits[e]) {
          acc.best_hits[e] = counts[e];
          acc.best_template[e] = t;
        }
      }
    }
  });

  // Chunks are merged in index order, and chunk c covers lower template
  // indices than chunk c+1, so ties keep the lowest template id for any
  // worker count.
  for (const Accumulator& acc : accumulators) {
    for (int e = 0; e < events; ++e) {
      result.hits[e] += acc.hits[e];
      if (acc.best_hits[e] > result.best_hits[e]) {
        result.best_hits[e] = acc.best_hits[e];
        result.best_template[e] = acc.best_template[e];
      }
    }
  }

  for (int e = 0; e < events; ++e) {
    if (result.hits[e] == 0) {
      ++result.unhit_events;
      continue;
    }
    if (result.hardest_event < 0 ||
        result.hits[e] < result.hits[result.hardest_event])
      result.hardest_event = e;
  }
  return result;
}

std::string render_explore_csv(const ExploreResult& result,
                               const ExperimentConfig&) {
  std::string out = "event,hits,best_template,best_template_hits\n";
  for (std::size_t e = 0; e < result.hits.size(); ++e) {
    out += std::to_string(e);
    out += ',';
    out += std::to_string(result.hits[e]);
    out += ',';
    out += std::to_string(result.best_template[e]);
    out += ',';
    out += std::to_string(result.best_hits[e]);
    out += '\n';
  }
  return out;
}

std::string render_explore_summary(const ExploreResult& result,
                                   const ExperimentConfig& config) {
  const bool northstar = config.simulator.kind == SimulatorKind::kNorthStar;
  std::ostringstream out;
  out << "exploration over " << result.templates << " random templates ("
      << result.runs_per_template << " run(s) each, "
      << simulator_name(config.simulator.kind) << ")\n";
  out << "events hit: " << (result.hits.size() - result.unhit_events) << " of "
      << result.hits.size() << " (" << result.unhit_events << " never hit)\n";
  if (result.hardest_event >= 0) {
    out << "hardest hit event: " << result.hardest_event;
    if (northstar)
      out << " = " << event_name(event_from_index(result.hardest_event));
    out << " with " << result.hits[result.hardest_event] << " hits over "
        << result.total_runs << " runs\n";
    out << "best single template for it: #"
        << result.best_template[result.hardest_event] << " at rate "
        << fixed(result.best_rate(result.hardest_event), 4) << "\n";
  } else {
    out << "no event was hit\n";
  }
  return out.str();
}

OptimizeResult run_optimize(const ExperimentConfig& config) {
  config.validate();
  const int workers = resolve_workers(config.workers);
  const auto objective = make_objective(config, workers);
  OptimizeResult out;
  out.record = run_optimizer(config.optimizer, *objective, config.opt);
  out.p_iteration.reserve(out.record.iterations.size());
  for (std::size_t k = 0; k < out.record.iterations.size(); ++k) {
    out.p_iteration.push_back(true_probability(
        *objective, out.record.iterations[k].point, config.reference_samples,
        derive_seed(config.master_seed, kReferenceTag,
                    static_cast<std::uint64_t>(k + 1))));
  }
  out.p_final = true_probability(
      *objective, out.record.t_opt, config.reference_samples,
      derive_seed(config.master_seed, kReferenceTag,
                  static_cast<std::uint64_t>(0)));
  return out;
}

std::string render_iteration_table(const OptimizeResult& result,
                                   const ExperimentConfig& config) {
  const RunRecord& rec = result.record;
  const bool filtering = rec.optimizer == "implicit_filtering";
  const std::string p_label = probability_label(config);
  std::ostringstream out;
  out << rec.optimizer << " on " << simulator_name(config.simulator.kind)
      << ", master seed " << rec.master_seed << "\n";

  if (filtering) {
    pad(out, "I", 7);
    pad(out, "f*", 12);
    pad(out, "phi", 12);
    pad(out, "Update?", 9);
    pad(out, "h", 11);
    pad(out, p_label, 12);
    out << "\n";
  } else {
    pad(out, "I", 7);
    pad(out, "phi", 12);
    pad(out, "|g|", 11);
    pad(out, "|w|", 11);
    pad(out, "mu_ls", 11);
    pad(out, "Update?", 9);
    pad(out, p_label, 12);
    out << "\n";
  }

  for (std::size_t k = 0; k < rec.iterations.size(); ++k) {
    const IterationRecord& it = rec.iterations[k];
    if (filtering) {
      pad(out, std::to_string(it.iter), 7);
      pad(out, fixed(it.f_star, 4), 12);
      pad(out, fixed(it.phi_bar, 4), 12);
      pad(out, it.accepted ? "True" : "False", 9);
      pad(out, compact(it.step_param), 11);
      pad(out, fixed(result.p_iteration[k], 4), 12);
    } else {
      // I.lsIter: the number after the decimal point is the final line
      // search iteration.
      pad(out, std::to_string(it.iter) + "." + std::to_string(it.ls_iter), 7);
      pad(out, fixed(it.phi_bar, 4), 12);
      pad(out, compact(it.grad_norm), 11);
      pad(out, compact(it.noise_level), 11);
      pad(out, compact(it.step_param), 11);
      pad(out, it.accepted ? "True" : "False", 9);
      pad(out, fixed(result.p_iteration[k], 4), 12);
    }
    out << "\n";
  }

  out << "\nfinal results\n";
  if (config.simulator.kind == SimulatorKind::kNorthStar) {
    const Template tpl = softmax_blocks(rec.t_opt);
    const auto block = [&](const char* name, const double* w, int len) {
      out << "  " << name << " = (";
      for (int i = 0; i < len; ++i)
        out << (i ? ", " : "") << fixed(w[i], 4);
      out << ")\n";
    };
    block("IW", tpl.iw.data(), 5);
    block("SW", tpl.sw.data(), kNumRegisters);
    block("TW", tpl.tw.data(), kNumRegisters);
    block("CW", tpl.cw.data(), 2);
  } else {
    Eigen::VectorXd weights(rec.t_opt.size());
    softmax_span(rec.t_opt.data(), static_cast<int>(rec.t_opt.size()),
                 weights.data());
    out << "  weights = (";
    for (Eigen::Index i = 0; i < weights.size(); ++i)
      out << (i ? ", " : "") << fixed(weights(i), 4);
    out << ")\n";
  }
  out << "  total simulations = " << rec.total_simulations << "\n";
  out << "  phi_opt = "
      << (std::isfinite(rec.phi_bar_opt) ? fixed(rec.phi_bar_opt, 6)
                                         : std::string("none (no accepted step)"))
      << "\n";
  out << "  " << p_label << " at t_opt = " << fixed(result.p_final, 4) << "\n";
  out << "  termination: " << rec.termination_reason << "\n";
  return out.str();
}

EnsembleResult run_ensemble(const ExperimentConfig& config) {
  config.validate();
  if (config.ensemble.cells.empty())
    throw ConfigError("ensemble: at least one (N, n) cell is required");

  const int runs = config.ensemble.runs;
  const auto cells = config.ensemble.cells;
  EnsembleResult result;
  result.records.assign(cells.size(), std::vector<RunRecord>(
                                          static_cast<std::size_t>(runs)));
  result.p_opt.assign(cells.size(),
                      std::vector<double>(static_cast<std::size_t>(runs), 0.0));

  const int workers = resolve_workers(config.workers);
  const long long tasks = static_cast<long long>(cells.size()) * runs;
  parallel_chunks(tasks, workers, [&](int, long long begin, long long end) {
    for (long long task = begin; task < end; ++task) {
      const auto cell = static_cast<std::size_t>(task / runs);
      const auto run = static_cast<std::size_t>(task % runs);
      const auto [n_samples, n_dirs] = cells[cell];

      OptimizerConfig oc = config.opt;
      oc.samples_per_point = n_samples;
      oc.n_directions = n_dirs;
      // The run seed depends on the cell's content and the run id only,
      // never on execution order.
      oc.master_seed = derive_seed(config.master_seed, kCellTag,
                                   static_cast<std::uint64_t>(n_samples),
                                   static_cast<std::uint64_t>(n_dirs),
                                   static_cast<std::uint64_t>(run));
      const auto objective = make_objective(config, 1);
      RunRecord rec = run_optimizer(config.optimizer, *objective, oc);
      result.p_opt[cell][run] = true_probability(
          *objective, rec.t_opt, config.reference_samples,
          derive_seed(oc.master_seed, kReferenceTag));
      result.records[cell][run] = std::move(rec);
    }
  });

  for (std::size_t cell = 0; cell < cells.size(); ++cell) {
    CellStats stats;
    stats.samples_per_point = cells[cell].first;
    stats.directions = cells[cell].second;
    stats.runs = runs;
    std::vector<double> iters, phis;
    iters.reserve(static_cast<std::size_t>(runs));
    phis.reserve(static_cast<std::size_t>(runs));
    for (const RunRecord& rec : result.records[cell]) {
      iters.push_back(static_cast<double>(rec.iterations.size()));
      phis.push_back(std::isfinite(rec.phi_bar_opt) ? rec.phi_bar_opt
                                                    : rec.initial_phi_bar);
    }
    const auto& probs = result.p_opt[cell];
    std::tie(stats.mean_iters, stats.var_iters) = mean_and_variance(iters);
    std::tie(stats.mean_phi_opt, stats.var_phi_opt) = mean_and_variance(phis);
    std::tie(stats.mean_p_opt, stats.var_p_opt) = mean_and_variance(probs);
    stats.max_p_opt = *std::max_element(probs.begin(), probs.end());
    stats.failures = static_cast<int>(
        std::count(probs.begin(), probs.end(), 0.0));
    result.cells.push_back(stats);
  }
  return result;
}

std::string render_stats_csv(const std::vector<CellStats>& cells) {
  std::string out =
      "N,n,mean_iters,var_iters,mean_phi_opt,var_phi_opt,mean_p_opt,"
      "var_p_opt,max_p_opt,failures,runs\n";
  for (const CellStats& c : cells) {
    out += std::to_string(c.samples_per_point);
    out += ',';
    out += std::to_string(c.directions);
    out += ',';
    out += shortest(c.mean_iters);
    out += ',';
    out += shortest(c.var_iters);
    out += ',';
    out += shortest(c.mean_phi_opt);
    out += ',';
    out += shortest(c.var_phi_opt);
    out += ',';
    out += shortest(c.mean_p_opt);
    out += ',';
    out += shortest(c.var_p_opt);
    out += ',';
    out += shortest(c.max_p_opt);
    out += ',';
    out += std::to_string(c.failures);
    out += ',';
    out += std::to_string(c.runs);
    out += '\n';
  }
  return out;
}

std::vector<CellStats> parse_stats_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line !=
          "N,n,mean_iters,var_iters,mean_phi_opt,var_phi_opt,mean_p_opt,"
          "var_p_opt,max_p_opt,failures,runs")
    throw std::runtime_error("stats file has an unexpected header");
  std::vector<CellStats> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 11)
      throw std::runtime_error("stats row has " +
                               std::to_string(fields.size()) + " fields");
    CellStats c;
    c.samples_per_point = static_cast<int>(parse_int(fields[0]));
    c.directions = static_cast<int>(parse_int(fields[1]));
    c.mean_iters = parse_double(fields[2]);
    c.var_iters = parse_double(fields[3]);
    c.mean_phi_opt = parse_double(fields[4]);
    c.var_phi_opt = parse_double(fields[5]);
    c.mean_p_opt = parse_double(fields[6]);
    c.var_p_opt = parse_double(fields[7]);
    c.max_p_opt = parse_double(fields[8]);
    c.failures = static_cast<int>(parse_int(fields[9]));
    c.runs = static_cast<int>(parse_int(fields[10]));
    cells.push_back(c);
  }
  return cells;
}

std::string render_stats_table(const std::vector<CellStats>& cells,
                               const ExperimentConfig& config) {
  std::ostringstream out;
  out << optimizer_name(config.optimizer) << " ensembles, per-iteration budget "
      << config.ensemble.budget << ", " << config.ensemble.runs
      << " runs per cell\n";
  const char* headers[] = {"N",          "n",          "mean_iters",
                           "var_iters",  "mean_phi",   "var_phi",
                           "mean_p_opt", "var_p_opt",  "max_p_opt",
                           "failures",   "runs"};
  for (const char* h : headers) pad(out, h, 12);
  out << "\n";
  for (const CellStats& c : cells) {
    pad(out, std::to_string(c.samples_per_point), 12);
    pad(out, std::to_string(c.directions), 12);
    pad(out, fixed(c.mean_iters, 2), 12);
    pad(out, fixed(c.var_iters, 2), 12);
    pad(out, fixed(c.mean_phi_opt, 4), 12);
    pad(out, compact(c.var_phi_opt), 12);
    pad(out, fixed(c.mean_p_opt, 4), 12);
    pad(out, compact(c.var_p_opt), 12);
    pad(out, fixed(c.max_p_opt, 4), 12);
    pad(out, std::to_string(c.failures), 12);
    pad(out, std::to_string(c.runs), 12);
    out << "\n";
  }
  if (config.ensemble.runs == 1)
    out << "warning: single-run cells; variances are degenerate (0)\n";
  return out.str();
}

LandscapeResult run_landscape(const ExperimentConfig& config) {
  config.validate();
  const int workers = resolve_workers(config.workers);
  const auto objective = make_objective(config, 1);
  const int d = objective->dim();

  LandscapeResult result;
  const auto dirs =
      sample_directions(2, d, derive_seed(config.master_seed, kGridDirTag));
  result.y1 = dirs[0];
  result.y2 = dirs[1];

  const int points = config.landscape.points;
  result.offsets.resize(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    result.offsets[static_cast<std::size_t>(i)] =
        -config.landscape.extent +
        2.0 * config.landscape.extent * i / (points - 1);

  Eigen::VectorXd center = config.landscape.center;
  if (center.size() == 0) center = Eigen::VectorXd::Zero(d);

  // One shared evaluation seed: identical grid nodes get identical values
  // (the extent-0 degenerate grid is constant) and neighboring nodes share
  // their noise draws, which keeps slices visually coherent.
  const std::uint64_t eval_seed =
      derive_seed(config.master_seed, kGridEvalTag);
  result.values.resize(points, points);
  parallel_chunks(static_cast<long long>(points) * points, workers,
                  [&](int, long long begin, long long end) {
                    for (long long node = begin; node < end; ++node) {
                      const int i = static_cast<int>(node / points);
                      const int j = static_cast<int>(node % points);
                      const Eigen::VectorXd x =
                          center +
                          result.offsets[static_cast<std::size_t>(i)] * result.y1 +
                          result.offsets[static_cast<std::size_t>(j)] * result.y2;
                      result.values(i, j) = objective->evaluate(
                          x, config.landscape.samples, eval_seed);
                    }
                  });
  return result;
}

std::string render_grid_csv(const LandscapeResult& result) {
  std::string out = "u,v,value\n";
  const auto points = static_cast<Eigen::Index>(result.offsets.size());
  for (Eigen::Index i = 0; i < points; ++i) {
    for (Eigen::Index j = 0; j < points; ++j) {
      out += shortest(result.offsets[static_cast<std::size_t>(i)]);
      out += ',';
      out += shortest(result.offsets[static_cast<std::size_t>(j)]);
      out += ',';
      out += shortest(result.values(i, j));
      out += '\n';
    }
  }
  return out;
}

LandscapeResult parse_grid_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "u,v,value")
    throw std::runtime_error("grid file has an unexpected header");
  std::vector<double> us, vs, values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 3)
      throw std::runtime_error("grid row must have 3 fields");
    us.push_back(parse_double(fields[0]));
    vs.push_back(parse_double(fields[1]));
    values.push_back(parse_double(fields[2]));
  }
  const auto points = static_cast<std::size_t>(
      std::llround(std::sqrt(static_cast<double>(values.size()))));
  if (points * points != values.size())
    throw std::runtime_error("grid file is not a square grid");
  LandscapeResult result;
  result.offsets.assign(vs.begin(), vs.begin() + static_cast<long>(points));
  result.values.resize(static_cast<Eigen::Index>(points),
                       static_cast<Eigen::Index>(points));
  for (std::size_t k = 0; k < values.size(); ++k)
    result.values(static_cast<Eigen::Index>(k / points),
                  static_cast<Eigen::Index>(k % points)) = values[k];
  return result;
}

std::string command_explore(const ExperimentConfig& config,
                            const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_file(std::filesystem::path(dir) / "config.json", render_config(config));
  const ExploreResult result = run_explore(config);
  write_file(std::filesystem::path(dir) / "explore.csv",
             render_explore_csv(result, config));
  const std::string summary = render_explore_summary(result, config);
  write_file(std::filesystem::path(dir) / "summary.txt", summary);
  return summary;
}

std::string command_optimize(const ExperimentConfig& config,
                             const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_file(std::filesystem::path(dir) / "config.json", render_config(config));
  const OptimizeResult result = run_optimize(config);
  std::ostringstream log;
  result.record.write_jsonl(log);
  write_file(std::filesystem::path(dir) / "run.jsonl", log.str());
  const std::string table = render_iteration_table(result, config);
  write_file(std::filesystem::path(dir) / "table.txt", table);
  return table;
}

std::string command_ensemble(const ExperimentConfig& config,
                             const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_file(std::filesystem::path(dir) / "config.json", render_config(config));
  const EnsembleResult result = run_ensemble(config);

  const std::filesystem::path runs_dir = std::filesystem::path(dir) / "runs";
  std::filesystem::create_directories(runs_dir);
  for (std::size_t cell = 0; cell < result.records.size(); ++cell) {
    const auto [n_samples, n_dirs] = config.ensemble.cells[cell];
    for (std::size_t run = 0; run < result.records[cell].size(); ++run) {
      std::ostringstream log;
      result.records[cell][run].write_jsonl(log);
      write_file(runs_dir / ("N" + std::to_string(n_samples) + "_n" +
                             std::to_string(n_dirs) + "_run" +
                             std::to_string(run) + ".jsonl"),
                 log.str());
    }
  }
  write_file(std::filesystem::path(dir) / "stats.csv",
             render_stats_csv(result.cells));
  const std::string table = render_stats_table(result.cells, config);
  write_file(std::filesystem::path(dir) / "summary.txt", table);
  return table;
}

std::string command_landscape(const ExperimentConfig& config,
                              const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_file(std::filesystem::path(dir) / "config.json", render_config(config));
  const LandscapeResult result = run_landscape(config);
  write_file(std::filesystem::path(dir) / "landscape.csv",
             render_grid_csv(result));
  std::ostringstream out;
  out << "landscape grid " << config.landscape.points << "x"
      << config.landscape.points << ", extent " << config.landscape.extent
      << ", " << config.landscape.samples << " samples per node\n";
  return out.str();
}

std::string command_true_probability(const ExperimentConfig& config,
                                     const std::string& dir,
                                     const Eigen::VectorXd& raw) {
  config.validate();
  const int workers = resolve_workers(config.workers);
  const auto objective = make_objective(config, workers);
  Eigen::VectorXd point = raw;
  if (point.size() == 0) {
    point = Eigen::VectorXd::Zero(objective->dim());
  } else if (point.size() != objective->dim()) {
    throw ConfigError("point has " + std::to_string(point.size()) +
                      " entries, objective expects " +
                      std::to_string(objective->dim()));
  }
  const double p =
      true_probability(*objective, point, config.reference_samples,
                       derive_seed(config.master_seed, kReferenceTag));
  const std::string line = probability_label(config) + " = " + shortest(p) +
                           " (" + std::to_string(config.reference_samples) +
                           " reference samples)\n";
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    write_file(std::filesystem::path(dir) / "config.json",
               render_config(config));
    write_file(std::filesystem::path(dir) / "true_probability.txt", line);
  }
  return line;
}

}  // namespace cdg::harness
