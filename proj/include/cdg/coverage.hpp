#pragma once

// Shared coverage-space vocabulary: instruction templates, coverage events,
// and per-run / aggregated hit information.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cdg {

inline constexpr int kNumRegisters = 8;
inline constexpr int kTemplateDim = 23;   // 5 + 8 + 8 + 2 block layout
inline constexpr int kNorthStarEvents = 80;

enum class Mnemonic : std::uint8_t { kNop = 0, kSim = 1, kCm1 = 2, kCm2 = 3, kCm3 = 4 };

const char* to_string(Mnemonic m);

// Cycles an instruction occupies the execution stage.  Nop never enters a pipe.
int exec_latency(Mnemonic m);

struct Instruction {
  Mnemonic mnemonic = Mnemonic::kNop;
  std::uint8_t src = 0;  // source register
  std::uint8_t tgt = 0;  // target register
  bool uses_cr = false;  // reads and writes the condition register
};

// Instruction template: per-field sampling distributions.
// iw: instruction type (Nop, Sim, Cm1, Cm2, Cm3); sw/tw: source/target
// register; cw: (never touches CR, reads-and-writes CR).
struct Template {
  std::array<double, 5> iw{};
  std::array<double, kNumRegisters> sw{};
  std::array<double, kNumRegisters> tw{};
  std::array<double, 2> cw{};

  static Template uniform();
  static Template from_flat(const std::array<double, kTemplateDim>& flat);
  std::array<double, kTemplateDim> flat() const;

  // Each block must be a distribution: nonnegative, summing to 1 (1e-9).
  void validate() const;
};

// One observed pipeline state: stage-0 occupants of the complex and simple
// pipes (Nop meaning empty), occupancy of both execution stages, and whether
// the simple pipe's executing instruction touches the condition register.
struct CoverageEvent {
  Mnemonic c0_inst = Mnemonic::kNop;
  bool s0_sim = false;
  bool c1_used = false;
  bool s1_used = false;
  bool s1_cr = false;
};

// Canonical packing, c0_inst major and s1_cr minor: [0, 80).
int event_index(const CoverageEvent& e);
CoverageEvent event_from_index(int index);
std::string event_name(const CoverageEvent& e);

// The event the optimization experiments chase: a complex-arithmetic
// instruction parked in the complex pipe's stage 0 while the simple pipe
// executes with an empty stage 0 and an untouched condition register.
CoverageEvent hard_event();

// Which events one run hit: 0/1 per event index.
struct HitCoverage {
  std::vector<std::uint8_t> bits;

  int count() const {
    int c = 0;
    for (auto b : bits) c += b != 0;
    return c;
  }
};

// Per-event hit frequencies over sample_count runs.
struct EmpiricalCoverage {
  Eigen::VectorXd probs;
  long long sample_count = 0;
};

}  // namespace cdg
