#include "cdg/northstar.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include "cdg/parallel.hpp"
#include "cdg/rng.hpp"

namespace cdg {

const char* to_string(Mnemonic m) {
  switch (m) {
    case Mnemonic::kNop: return "Nop";
    case Mnemonic::kSim: return "Sim";
    case Mnemonic::kCm1: return "Cm1";
    case Mnemonic::kCm2: return "Cm2";
    case Mnemonic::kCm3: return "Cm3";
  }
  return "?";
}

int exec_latency(Mnemonic m) {
  switch (m) {
    case Mnemonic::kNop: return 0;  // never enters a pipe
    case Mnemonic::kSim: return 1;
    case Mnemonic::kCm1: return 1;
    case Mnemonic::kCm2: return 2;
    case Mnemonic::kCm3: return 3;
  }
  return 0;
}

Template Template::uniform() {
  Template t;
  t.iw.fill(0.2);
  t.sw.fill(1.0 / kNumRegisters);
  t.tw.fill(1.0 / kNumRegisters);
  t.cw.fill(0.5);
  return t;
}

Template Template::from_flat(const std::array<double, kTemplateDim>& flat) {
  Template t;
  std::copy(flat.begin(), flat.begin() + 5, t.iw.begin());
  std::copy(flat.begin() + 5, flat.begin() + 13, t.sw.begin());
  std::copy(flat.begin() + 13, flat.begin() + 21, t.tw.begin());
  std::copy(flat.begin() + 21, flat.end(), t.cw.begin());
  return t;
}

std::array<double, kTemplateDim> Template::flat() const {
  std::array<double, kTemplateDim> out{};
  std::copy(iw.begin(), iw.end(), out.begin());
  std::copy(sw.begin(), sw.end(), out.begin() + 5);
  std::copy(tw.begin(), tw.end(), out.begin() + 13);
  std::copy(cw.begin(), cw.end(), out.begin() + 21);
  return out;
}

namespace {

template <std::size_t N>
void check_block(const std::array<double, N>& block, const char* name) {
  double total = 0.0;
  for (double w : block) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument(std::string(name) + ": negative or non-finite weight");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string(name) + ": weights must sum to 1");
  }
}

template <std::size_t N>
std::array<double, N> cumulative(const std::array<double, N>& block) {
  double total = 0.0;
  for (double w : block) total += w;
  std::array<double, N> cum{};
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    acc += block[i] / total;
    cum[i] = acc;
  }
  cum[N - 1] = 1.0;
  return cum;
}

template <std::size_t N>
int pick(const std::array<double, N>& cum, double u) {
  for (std::size_t i = 0; i < N; ++i) {
    if (u < cum[i]) return static_cast<int>(i);
  }
  return static_cast<int>(N) - 1;
}

}  // namespace

void Template::validate() const {
  check_block(iw, "instruction weights");
  check_block(sw, "source weights");
  check_block(tw, "target weights");
  check_block(cw, "condition-register weights");
}

int event_index(const CoverageEvent& e) {
  const int c0 = static_cast<int>(e.c0_inst);
  if (c0 < 0 || c0 > 4) throw std::invalid_argument("bad stage-0 mnemonic");
  return ((((c0 * 2) + e.s0_sim) * 2 + e.c1_used) * 2 + e.s1_used) * 2 + e.s1_cr;
}

CoverageEvent event_from_index(int index) {
  if (index < 0 || index >= kNorthStarEvents) {
    throw std::invalid_argument("event index out of range");
  }
  CoverageEvent e;
  e.s1_cr = index & 1;
  e.s1_used = (index >> 1) & 1;
  e.c1_used = (index >> 2) & 1;
  e.s0_sim = (index >> 3) & 1;
  e.c0_inst = static_cast<Mnemonic>(index >> 4);
  return e;
}

std::string event_name(const CoverageEvent& e) {
  std::string out = "(";
  out += to_string(e.c0_inst);
  out += ", ";
  out += e.s0_sim ? "Sim" : "Nop";
  out += ", ";
  out += e.c1_used ? '1' : '0';
  out += ", ";
  out += e.s1_used ? '1' : '0';
  out += ", ";
  out += e.s1_cr ? '1' : '0';
  out += ")";
  return out;
}

CoverageEvent hard_event() {
  CoverageEvent e;
  e.c0_inst = Mnemonic::kCm2;
  e.s0_sim = false;
  e.c1_used = false;
  e.s1_used = true;
  e.s1_cr = false;
  return e;
}

CompiledTemplate::CompiledTemplate(const Template& t) {
  t.validate();
  iw_cum_ = cumulative(t.iw);
  sw_cum_ = cumulative(t.sw);
  tw_cum_ = cumulative(t.tw);
  const double cr_total = t.cw[0] + t.cw[1];
  cr_prob_ = t.cw[1] / cr_total;
}

Instruction CompiledTemplate::sample(std::mt19937_64& rng) const {
  Instruction ins;
  ins.mnemonic = static_cast<Mnemonic>(pick(iw_cum_, uniform01(rng)));
  ins.src = static_cast<std::uint8_t>(pick(sw_cum_, uniform01(rng)));
  ins.tgt = static_cast<std::uint8_t>(pick(tw_cum_, uniform01(rng)));
  const double u = uniform01(rng);
  ins.uses_cr = ins.mnemonic != Mnemonic::kNop && u < cr_prob_;
  return ins;
}

namespace {

struct Slot {
  bool occ = false;
  Instruction ins;
  std::uint64_t seq = 0;
  int remaining = 0;
};

struct Machine {
  Slot c0, c1, c2;  // complex pipe
  Slot s0, s1, s2;  // simple pipe
  std::uint64_t next_seq = 1;
  std::optional<Instruction> pending;  // fetched-ahead stream head

  long long fetched_pipe = 0;
  long long fetched_nop = 0;
  long long retired_pipe = 0;

  bool empty() const {
    return !c0.occ && !c1.occ && !c2.occ && !s0.occ && !s1.occ && !s2.occ;
  }

  // True when an older in-flight instruction writes this one's source
  // register, or both touch the condition register.
  bool hazard(const Slot& slot) const {
    for (const Slot* j : {&c0, &c1, &c2, &s0, &s1, &s2}) {
      if (!j->occ || j->seq >= slot.seq) continue;
      if (j->ins.tgt == slot.ins.src) return true;
      if (j->ins.uses_cr && slot.ins.uses_cr) return true;
    }
    return false;
  }

  void place(Slot& stage0, const Instruction& ins) {
    stage0.occ = true;
    stage0.ins = ins;
    stage0.seq = next_seq++;
    stage0.remaining = 0;
    ++fetched_pipe;
    pending.reset();
  }

  void cycle(const CompiledTemplate& tpl, std::mt19937_64& rng, bool fetch) {
    // Write-back completes; dependents may release this cycle.
    if (c2.occ) { c2.occ = false; ++retired_pipe; }
    if (s2.occ) { s2.occ = false; ++retired_pipe; }

    const auto finish_exec = [](Slot& exec, Slot& wb) {
      if (exec.occ && --exec.remaining == 0) {
        wb = exec;
        exec.occ = false;
      }
    };
    finish_exec(c1, c2);
    finish_exec(s1, s2);

    // Issue is strictly in program order: the younger stage-0 occupant may
    // only issue if the older one issued this cycle (dual issue) or the
    // other stage 0 is empty.
    const auto start_exec = [this](Slot& stage0, Slot& exec, const Slot& peer) {
      if (stage0.occ && !exec.occ && !hazard(stage0) &&
          !(peer.occ && peer.seq < stage0.seq)) {
        exec = stage0;
        exec.remaining = exec_latency(exec.ins.mnemonic);
        stage0.occ = false;
      }
    };
    if (s0.occ && c0.occ && c0.seq < s0.seq) {
      start_exec(c0, c1, s0);
      start_exec(s0, s1, c0);
    } else {
      start_exec(s0, s1, c0);
      start_exec(c0, c1, s0);
    }

    // A Sim that overflowed into the complex pipe returns to the simple
    // pipe as soon as its stage 0 frees up.
    if (c0.occ && c0.ins.mnemonic == Mnemonic::kSim && !s0.occ) {
      s0 = c0;
      c0.occ = false;
    }

    if (!fetch) return;
    for (int slot = 0; slot < 2; ++slot) {
      if (!pending) pending = tpl.sample(rng);
      const Mnemonic m = pending->mnemonic;
      if (m == Mnemonic::kNop) {
        pending.reset();
        ++fetched_nop;
      } else if (m == Mnemonic::kSim) {
        if (!s0.occ) place(s0, *pending);
        else if (!c0.occ) place(c0, *pending);
        else break;
      } else {
        if (!c0.occ) place(c0, *pending);
        else break;
      }
    }
  }

  CoverageEvent observe() const {
    CoverageEvent e;
    e.c0_inst = c0.occ ? c0.ins.mnemonic : Mnemonic::kNop;
    e.s0_sim = s0.occ;
    e.c1_used = c1.occ;
    e.s1_used = s1.occ;
    e.s1_cr = s1.occ && s1.ins.uses_cr;
    return e;
  }
};

}  // namespace

void CompiledTemplate::run_bits(std::uint64_t seed, std::uint8_t* hits) const {
  Machine m;
  auto rng = make_rng(seed);
  const int total = kObservationStart + kObservationCycles;
  for (int cycle = 0; cycle < total; ++cycle) {
    m.cycle(*this, rng, true);
    if (cycle >= kObservationStart) hits[event_index(m.observe())] = 1;
  }
}

std::vector<Instruction> northstar_generate(const Template& t, int count,
                                            std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("instruction count must be >= 0");
  const CompiledTemplate tpl(t);
  auto rng = make_rng(seed);
  std::vector<Instruction> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(tpl.sample(rng));
  return out;
}

Template sample_dirichlet_template(std::mt19937_64& rng) {
  Template t;
  const auto iw = sample_dirichlet_uniform(5, rng);
  const auto sw = sample_dirichlet_uniform(kNumRegisters, rng);
  const auto tw = sample_dirichlet_uniform(kNumRegisters, rng);
  const auto cw = sample_dirichlet_uniform(2, rng);
  std::copy(iw.begin(), iw.end(), t.iw.begin());
  std::copy(sw.begin(), sw.end(), t.sw.begin());
  std::copy(tw.begin(), tw.end(), t.tw.begin());
  std::copy(cw.begin(), cw.end(), t.cw.begin());
  return t;
}

HitCoverage northstar_run(const Template& t, std::uint64_t seed) {
  const CompiledTemplate tpl(t);
  HitCoverage cov;
  cov.bits.assign(kNorthStarEvents, 0);
  tpl.run_bits(seed, cov.bits.data());
  return cov;
}

EmpiricalCoverage northstar_estimate(const Template& t, long long n,
                                     std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("sample count must be positive");
  const CompiledTemplate tpl(t);
  std::array<long long, kNorthStarEvents> counts{};
  std::array<std::uint8_t, kNorthStarEvents> bits{};
  for (long long r = 0; r < n; ++r) {
    bits.fill(0);
    tpl.run_bits(derive_seed(seed, static_cast<std::uint64_t>(r)), bits.data());
    for (int e = 0; e < kNorthStarEvents; ++e) counts[e] += bits[e];
  }
  EmpiricalCoverage out;
  out.sample_count = n;
  out.probs.resize(kNorthStarEvents);
  for (int e = 0; e < kNorthStarEvents; ++e) {
    out.probs[e] = static_cast<double>(counts[e]) / static_cast<double>(n);
  }
  return out;
}

NorthStarRunStats northstar_run_stats(const Template& t, std::uint64_t seed,
                                      int max_drain_cycles) {
  const CompiledTemplate tpl(t);
  Machine m;
  auto rng = make_rng(seed);
  const int total = kObservationStart + kObservationCycles;
  for (int cycle = 0; cycle < total; ++cycle) m.cycle(tpl, rng, true);

  NorthStarRunStats stats;
  int drain = 0;
  while (!m.empty() && drain < max_drain_cycles) {
    m.cycle(tpl, rng, false);
    ++drain;
  }
  stats.fetched_pipe = m.fetched_pipe;
  stats.fetched_nop = m.fetched_nop;
  stats.retired_pipe = m.retired_pipe;
  stats.drain_cycles = drain;
  stats.drained = m.empty();
  return stats;
}

SweepResult northstar_legal_sweep(int templates, int runs_per_template,
                                  std::uint64_t seed, int workers) {
  if (templates <= 0 || runs_per_template <= 0) {
    throw std::invalid_argument("sweep sizes must be positive");
  }
  const int nw = resolve_workers(workers);
  std::vector<std::array<long long, kNorthStarEvents>> partial(
      static_cast<std::size_t>(std::min<long long>(nw, templates)));
  for (auto& p : partial) p.fill(0);

  parallel_chunks(templates, nw, [&](int chunk, long long begin, long long end) {
    auto& counts = partial[static_cast<std::size_t>(chunk)];
    std::array<std::uint8_t, kNorthStarEvents> bits{};
    for (long long ti = begin; ti < end; ++ti) {
      auto trng = make_rng(derive_seed(seed, 0x74706cull, static_cast<std::uint64_t>(ti)));
      const Template t = sample_dirichlet_template(trng);
      const CompiledTemplate tpl(t);
      for (int r = 0; r < runs_per_template; ++r) {
        bits.fill(0);
        tpl.run_bits(derive_seed(seed, 0x72756eull, static_cast<std::uint64_t>(ti),
                                 static_cast<std::uint64_t>(r)),
                     bits.data());
        for (int e = 0; e < kNorthStarEvents; ++e) counts[e] += bits[e];
      }
    }
  });

  SweepResult out;
  out.hits.assign(kNorthStarEvents, 0);
  out.runs = static_cast<long long>(templates) * runs_per_template;
  for (const auto& p : partial) {
    for (int e = 0; e < kNorthStarEvents; ++e) out.hits[e] += p[e];
  }
  return out;
}

}  // namespace cdg
