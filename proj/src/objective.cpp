#include "cdg/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cdg/multiplication_model.hpp"
#include "cdg/northstar.hpp"
#include "cdg/parallel.hpp"
#include "cdg/rng.hpp"

namespace cdg {

void TargetSelector::validate(int m) const {
  if (indices.empty())
    throw std::invalid_argument("target selector needs at least one event");
  std::vector<int> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < 0 || sorted[i] >= m)
      throw std::invalid_argument("target event index out of range");
    if (i > 0 && sorted[i] == sorted[i - 1])
      throw std::invalid_argument("target event indices must be distinct");
  }
}

void softmax_span(const double* x, int len, double* out) {
  double mx = x[0];
  for (int i = 0; i < len; ++i) {
    if (!std::isfinite(x[i]))
      throw std::invalid_argument("softmax input must be finite");
    mx = std::max(mx, x[i]);
  }
  double sum = 0.0;
  for (int i = 0; i < len; ++i) {
    out[i] = std::exp(x[i] - mx);
    sum += out[i];
  }
  for (int i = 0; i < len; ++i) out[i] /= sum;
}

Template softmax_blocks(const Eigen::VectorXd& raw) {
  if (raw.size() != kTemplateDim)
    throw std::invalid_argument("raw template must have 23 entries");
  Template t;
  softmax_span(raw.data(), 5, t.iw.data());
  softmax_span(raw.data() + 5, kNumRegisters, t.sw.data());
  softmax_span(raw.data() + 5 + kNumRegisters, kNumRegisters, t.tw.data());
  softmax_span(raw.data() + 5 + 2 * kNumRegisters, 2, t.cw.data());
  return t;
}

std::vector<Eigen::VectorXd> sample_directions(int n, int d,
                                               std::uint64_t seed) {
  if (n < 1 || d < 1)
    throw std::invalid_argument("direction count and dimension must be >= 1");
  auto rng = make_rng(seed);
  std::vector<Eigen::VectorXd> dirs;
  dirs.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(dirs.size()) < n) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = sample_normal(rng);
    const double norm = v.norm();
    if (norm < 1e-12) continue;  // essentially impossible, but stay safe
    dirs.push_back(v / norm);
  }
  return dirs;
}

namespace {

// Shared fan-out: runs `hits_in(begin, end)` over worker chunks and sums the
// integer hit counts in chunk order, so the result is independent of the
// worker count and of thread scheduling.
template <typename ChunkCounter>
double mean_target_mass(long long n_samples, int workers,
                        const ChunkCounter& count_chunk) {
  if (n_samples < 1)
    throw std::invalid_argument("sample count must be >= 1");
  std::vector<long long> counts(static_cast<std::size_t>(
      std::min<long long>(std::max(workers, 1), n_samples)));
  parallel_chunks(n_samples, static_cast<int>(counts.size()),
                  [&](int chunk, long long begin, long long end) {
                    counts[static_cast<std::size_t>(chunk)] =
                        count_chunk(begin, end);
                  });
  long long hits = 0;
  for (long long c : counts) hits += c;
  if (hits == 0) return 0.0;
  return -static_cast<double>(hits) / static_cast<double>(n_samples);
}

}  // namespace

NorthStarObjective::NorthStarObjective(TargetSelector target, int workers)
    : target_(std::move(target)), workers_(resolve_workers(workers)) {
  target_.validate(kNorthStarEvents);
}

double NorthStarObjective::evaluate(const Eigen::VectorXd& x,
                                    long long n_samples,
                                    std::uint64_t seed) const {
  const CompiledTemplate tpl(softmax_blocks(x));
  return mean_target_mass(
      n_samples, workers_, [&](long long begin, long long end) {
        long long hits = 0;
        std::uint8_t bits[kNorthStarEvents];
        for (long long r = begin; r < end; ++r) {
          std::fill(bits, bits + kNorthStarEvents, 0);
          tpl.run_bits(derive_seed(seed, static_cast<std::uint64_t>(r)), bits);
          for (int idx : target_.indices) hits += bits[idx];
        }
        return hits;
      });
}

MultiplicationObjective::MultiplicationObjective(int bins,
                                                 TargetSelector target,
                                                 int workers)
    : bins_(bins), target_(std::move(target)),
      workers_(resolve_workers(workers)) {
  if (bins_ < 2) throw std::invalid_argument("need at least two bins");
  target_.validate(bins_);
}

double MultiplicationObjective::evaluate(const Eigen::VectorXd& x,
                                         long long n_samples,
                                         std::uint64_t seed) const {
  if (x.size() != bins_)
    throw std::invalid_argument("logit vector length must match bin count");
  std::vector<double> weights(static_cast<std::size_t>(bins_));
  softmax_span(x.data(), bins_, weights.data());
  const MultiplicationModel model(bins_);
  return mean_target_mass(
      n_samples, workers_, [&](long long begin, long long end) {
        long long hits = 0;
        for (long long r = begin; r < end; ++r) {
          const HitCoverage cov = model.run(
              weights, derive_seed(seed, static_cast<std::uint64_t>(r)));
          for (int idx : target_.indices) hits += cov.bits[idx];
        }
        return hits;
      });
}

}  // namespace cdg
