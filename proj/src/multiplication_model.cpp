#include "cdg/multiplication_model.hpp"

#include <cmath>
#include <stdexcept>

#include "cdg/rng.hpp"

namespace cdg {

namespace {

int product_bin(const CategoricalSampler& sampler, int k, std::mt19937_64& rng) {
  const int i = sampler.sample(rng);
  const int j = sampler.sample(rng);
  // Uniform on the left-open bin ((b)/k, (b+1)/k] for 0-based bin b.
  const double x = (i + 1 - uniform01(rng)) / k;
  const double y = (j + 1 - uniform01(rng)) / k;
  const int bin = static_cast<int>(std::ceil(x * y * k)) - 1;
  return std::min(std::max(bin, 0), k - 1);
}

}  // namespace

MultiplicationModel::MultiplicationModel(int bins) : bins_(bins) {
  if (bins < 2 || bins > 100000) {
    throw std::invalid_argument("bin count must be in [2, 100000]");
  }
}

HitCoverage MultiplicationModel::run(const std::vector<double>& weights,
                                     std::uint64_t seed) const {
  if (static_cast<int>(weights.size()) != bins_) {
    throw std::invalid_argument("weight vector length must equal bin count");
  }
  const CategoricalSampler sampler(weights);
  auto rng = make_rng(seed);
  HitCoverage cov;
  cov.bits.assign(static_cast<std::size_t>(bins_), 0);
  cov.bits[static_cast<std::size_t>(product_bin(sampler, bins_, rng))] = 1;
  return cov;
}

EmpiricalCoverage MultiplicationModel::estimate(const std::vector<double>& weights,
                                                long long n,
                                                std::uint64_t seed) const {
  if (static_cast<int>(weights.size()) != bins_) {
    throw std::invalid_argument("weight vector length must equal bin count");
  }
  if (n <= 0) throw std::invalid_argument("sample count must be positive");
  const CategoricalSampler sampler(weights);
  std::vector<long long> counts(static_cast<std::size_t>(bins_), 0);
  for (long long r = 0; r < n; ++r) {
    auto rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    ++counts[static_cast<std::size_t>(product_bin(sampler, bins_, rng))];
  }
  EmpiricalCoverage out;
  out.sample_count = n;
  out.probs.resize(bins_);
  for (int b = 0; b < bins_; ++b) {
    out.probs[b] = static_cast<double>(counts[static_cast<std::size_t>(b)]) /
                   static_cast<double>(n);
  }
  return out;
}

}  // namespace cdg
