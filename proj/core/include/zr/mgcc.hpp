// Finite-horizon checker for the modified geometric control condition: every
// seed must reach the damping region along its generalized bicharacteristic
// within |s| <= T, with only hyperbolic interface crossings on the way.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "zr/damping.hpp"
#include "zr/flow.hpp"
#include "zr/geometry.hpp"
#include "zr/symbol.hpp"

namespace zr::mgcc {

enum class VerdictKind { Controlled, Failed, Undetermined };

const char* verdict_name(VerdictKind v);

struct Verdict {
  VerdictKind kind = VerdictKind::Undetermined;
  // Controlled: signed flow time of the first damped sample (smallest |s|,
  // ties resolved forward).
  double control_time = 0.0;
  // Failed: the forward leg of the undamped orbit, re-traceable via evolve.
  flow::Trajectory witness;
  // Undetermined: what blocked the check.
  std::string reason;
};

struct SeedReport {
  sym::PhasePoint seed;
  Verdict verdict;
};

struct MGCCReport {
  std::vector<SeedReport> per_seed;
  double horizon = 0.0;
  int seed_count = 0;
  int controlled = 0;
  int failed = 0;
  int undetermined = 0;
  // Extremes of |control_time| over Controlled seeds; zero when none.
  double min_control_time = 0.0;
  double max_control_time = 0.0;

  // 0: all seeds controlled; 1: at least one failure; 2: no failures but
  // undetermined blockers remain.
  int exit_code() const;
};

struct MgccOptions {
  double a_min = 1e-12;    // strict-positivity threshold for "inside omega"
  double sample_ds = 0.01; // damping detection cadence along trajectories
  int threads = 1;
  flow::FlowOptions flow;  // gamma policy defaults to ContinueHyperbolic here

  MgccOptions() { flow.gamma_policy = flow::GammaPolicy::ContinueHyperbolic; }
};

MGCCReport check_mgcc(const geom::DomainSpec& dom,
                      const geom::MetricField& metric,
                      const DampingField& damping, double horizon,
                      const std::vector<sym::PhasePoint>& seeds,
                      const MgccOptions& opts = {});

struct LatticeOptions {
  unsigned rng_seed = 0;  // rotates the angular offsets, nothing else
  double interior_margin_scale = 0.05;  // times the domain diameter
};

// Deterministic characteristic seed set: interior grid positions times
// unit-symbol directions, boundary positions times an R-grid of lifted
// covectors (R <= 1, the glancing value included), and interface seeds
// where the interface itself carries characteristic tangential covectors
// (the equator of the ball). Dimension one emits the interior family only
// (the symbol sphere is two points and the ends carry no tangential data).
// Every seed satisfies |p| <= 1e-12 by construction.
std::vector<sym::PhasePoint> seed_lattice(const geom::DomainSpec& dom,
                                          const geom::MetricField& metric,
                                          int resolution,
                                          const LatticeOptions& opts = {});

// Summary as a single JSON object; per-seed verdicts as JSON-lines.
void write_summary_json(const MGCCReport& report, std::ostream& out);
void write_seed_jsonl(const MGCCReport& report, std::ostream& out);

}  // namespace zr::mgcc
