#pragma once

// Deterministic seeding and portable samplers.
//
// Every random quantity in the library is a pure function of an explicit
// 64-bit seed.  Seeds for nested work units (runs inside an evaluation,
// runs inside an ensemble cell, ...) are derived with derive_seed, so
// results never depend on scheduling, worker count, or evaluation order.
// Samplers are hand-rolled on top of std::mt19937_64 because the standard
// distribution classes have implementation-defined output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace cdg {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t seed_mix(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ splitmix64(v + 0x9e3779b97f4a7c15ull));
}

template <class... Rest>
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t first, Rest... rest) {
  const std::uint64_t h = seed_mix(base, first);
  if constexpr (sizeof...(rest) == 0) {
    return h;
  } else {
    return derive_seed(h, rest...);
  }
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(splitmix64(seed));
}

// Uniform on [0, 1) with 53 random mantissa bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1]; safe as a log argument.
inline double uniform01_pos(std::mt19937_64& rng) {
  return 1.0 - uniform01(rng);
}

// Standard normal via Box-Muller (the sine partner is discarded so each
// draw consumes a fixed number of engine outputs).
inline double sample_normal(std::mt19937_64& rng) {
  const double u1 = uniform01_pos(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

inline double sample_exponential(std::mt19937_64& rng) {
  return -std::log(uniform01_pos(rng));
}

// Inverse-CDF sampler over a fixed weight vector.  Zero-weight entries are
// never selected (their CDF interval is empty under the strict comparison).
class CategoricalSampler {
 public:
  explicit CategoricalSampler(const std::vector<double>& weights) {
    if (weights.empty()) throw std::invalid_argument("categorical: empty weights");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("categorical: negative or NaN weight");
      total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("categorical: weights sum to zero");
    cum_.resize(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i] / total;
      cum_[i] = acc;
    }
    cum_.back() = 1.0;
  }

  int index_for(double u) const {
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    if (it == cum_.end()) return static_cast<int>(cum_.size()) - 1;
    return static_cast<int>(it - cum_.begin());
  }

  int sample(std::mt19937_64& rng) const { return index_for(uniform01(rng)); }

  std::size_t size() const { return cum_.size(); }

 private:
  std::vector<double> cum_;
};

// Dirichlet(1) over `dim` categories: normalized iid standard exponentials.
inline std::vector<double> sample_dirichlet_uniform(int dim, std::mt19937_64& rng) {
  std::vector<double> out(static_cast<std::size_t>(dim));
  double total = 0.0;
  for (auto& v : out) {
    v = sample_exponential(rng);
    total += v;
  }
  for (auto& v : out) v /= total;
  return out;
}

}  // namespace cdg
