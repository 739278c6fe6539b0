#pragma once

// Closed-form warm-up model: two numbers are drawn from a binned
// distribution over (0, 1] and multiplied; coverage is the bin of the
// product.  Low product bins are easy to hit, the top bin is hard, and
// uniform weights admit an analytic answer, which makes the model a good
// calibration target for the whole pipeline.

#include <cstdint>
#include <vector>

#include "cdg/coverage.hpp"

namespace cdg {

class MultiplicationModel {
 public:
  explicit MultiplicationModel(int bins);

  int bins() const { return bins_; }

  // One run: draws bin indices i and j from `weights`, then X uniformly on
  // ((i-1)/k, i/k] and Y on ((j-1)/k, j/k], and sets the single bit of the
  // product's bin, ceil(XY * k) (1-based).
  HitCoverage run(const std::vector<double>& weights, std::uint64_t seed) const;

  // Mean of n independent runs; run r uses derive_seed(seed, r).
  EmpiricalCoverage estimate(const std::vector<double>& weights, long long n,
                             std::uint64_t seed) const;

 private:
  int bins_;
};

}  // namespace cdg
