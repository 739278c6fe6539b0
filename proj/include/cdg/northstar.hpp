#pragma once

// Abstract dual-pipe in-order processor model.
//
// Two three-stage pipes (stage 0: dispatch, stage 1: execute, stage 2:
// write-back) consumes a random instruction stream drawn from a Template.
// The simple pipe executes only Sim instructions; the complex pipe executes
// Cm1/Cm2/Cm3 (1/2/3 execution cycles) and doubles as overflow for Sim when
// the simple pipe's stage 0 is busy.  Up to two instructions dispatch per
// cycle in program order; a Nop consumes a fetch slot but never occupies a
// pipe.  An instruction whose source register (or condition-register use)
// matches an in-flight older instruction's target stalls in stage 0 until
// that write-back completes.  Execution also begins strictly in program
// order: while an older instruction is stalled in either stage 0, younger
// ones wait.  A Sim waiting in the complex pipe's stage 0
// moves back to the simple pipe the moment that stage 0 frees up, so a
// hosted Sim in the complex pipe always coincides with a busy simple pipe.
//
// Coverage: at the end of every cycle inside the observation window the
// occupancy state is recorded as a CoverageEvent.  A run lasts
// kObservationStart + kObservationCycles cycles from a cold start and
// reports the union of observed events.

#include <cstdint>
#include <random>
#include <vector>

#include "cdg/coverage.hpp"

namespace cdg {

inline constexpr int kObservationStart = 10;
inline constexpr int kObservationCycles = 100;

// Template with precomputed inverse-CDF samplers for the hot loops.
class CompiledTemplate {
 public:
  explicit CompiledTemplate(const Template& t);

  Instruction sample(std::mt19937_64& rng) const;

  // One run; sets hit flags for observed event indices in hits[0..80).
  void run_bits(std::uint64_t seed, std::uint8_t* hits) const;

 private:
  std::array<double, 5> iw_cum_{};
  std::array<double, kNumRegisters> sw_cum_{};
  std::array<double, kNumRegisters> tw_cum_{};
  double cr_prob_ = 0.0;
};

// The first `count` instructions of the stream a run with this seed would
// consume.
std::vector<Instruction> northstar_generate(const Template& t, int count,
                                            std::uint64_t seed);

// Random template: an independent Dirichlet(1) draw per block.
Template sample_dirichlet_template(std::mt19937_64& rng);

HitCoverage northstar_run(const Template& t, std::uint64_t seed);

// Mean hit frequencies over n runs; run r uses derive_seed(seed, r).
EmpiricalCoverage northstar_estimate(const Template& t, long long n,
                                     std::uint64_t seed);

// Bookkeeping counters for pipeline sanity checks.  After the observation
// window the stream is stopped and the pipes drain.
struct NorthStarRunStats {
  long long fetched_pipe = 0;   // dispatched into a pipe
  long long fetched_nop = 0;    // consumed fetch slots without a pipe
  long long retired_pipe = 0;   // completed write-back
  int drain_cycles = 0;         // cycles needed to empty the pipes at the end
  bool drained = false;
};

NorthStarRunStats northstar_run_stats(const Template& t, std::uint64_t seed,
                                      int max_drain_cycles = 64);

// Randomized reachability sweep: `templates` Dirichlet(1) templates, each
// run `runs_per_template` times.  hits[e] counts runs that observed event e.
struct SweepResult {
  std::vector<long long> hits;
  long long runs = 0;

  int legal_count() const {
    int c = 0;
    for (auto h : hits) c += h > 0;
    return c;
  }
};

SweepResult northstar_legal_sweep(int templates, int runs_per_template,
                                  std::uint64_t seed, int workers = 1);

}  // namespace cdg
