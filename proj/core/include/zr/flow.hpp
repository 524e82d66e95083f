// Generalized bicharacteristic flow: interior Hamiltonian flight with
// boundary-event detection, specular transmission at transversal hits, the
// four glancing branch cases, gliding arcs along the boundary, and the
// singular flow on the Dirichlet/Neumann interface.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "zr/geometry.hpp"
#include "zr/symbol.hpp"

namespace zr::flow {

enum class SegmentKind { InteriorArc, GlidingArc, SingularArc };

const char* segment_kind_name(SegmentKind k);

struct Sample {
  double s;
  sym::PhasePoint state;
};

struct Segment {
  SegmentKind kind;
  double s_start;
  double s_end;
  std::vector<Sample> samples;  // includes both endpoints
};

enum class EventAction { Reflect, EnterGliding, LeaveGliding, EnterInterior, Terminate };

const char* event_action_name(EventAction a);

struct BoundaryEvent {
  double s;
  Eigen::VectorXd location;
  sym::BoundaryClassification classification;
  EventAction action;
  bool on_interface = false;
  std::string reason;  // non-empty for Terminate
};

struct Trajectory {
  std::vector<Segment> segments;
  std::vector<BoundaryEvent> events;
  double s_end = 0.0;      // signed flow time actually covered
  bool complete = false;   // reached the requested |s_total|
  std::string termination_reason;

  const sym::PhasePoint& final_state() const;
};

enum class GammaPolicy { Terminate, ContinueHyperbolic };

struct FlowOptions {
  double tol_ode = 1e-12;    // interior integration error per unit time
  double tol_event = 1e-10;  // |phi| at located boundary events
  double tol_char = 1e-8;    // admissible |p| for seeds
  double eps_glance = 1e-7;  // near-tangential band and classifier threshold
  double sample_ds = 0.05;   // sampling cadence along arcs
  double glide_ds = 0.02;    // gliding re-examination cadence
  int max_events = 10000;
  GammaPolicy gamma_policy = GammaPolicy::Terminate;

  // Catalog domains keep the defaults; generic level-set domains get the
  // looser event and glancing thresholds.
  static FlowOptions for_domain(const geom::DomainSpec& dom);
};

// Flows the seed for the signed time s_total. Interior and boundary seeds
// are both admissible; interface seeds are routed onto the interface flow.
Trajectory evolve(const geom::DomainSpec& dom, const geom::MetricField& metric,
                  const sym::PhasePoint& seed, double s_total,
                  const FlowOptions& opts = {});

// Flows a doubly-tangential interface seed along the interface field;
// stationary when the interface has no tangent directions (dimension two).
Trajectory evolve_on_gamma(const geom::DomainSpec& dom,
                           const geom::MetricField& metric,
                           const sym::PhasePoint& seed, double s_total,
                           const FlowOptions& opts = {});

sym::PhasePoint time_reverse(const sym::PhasePoint& p);

// Comparison metric for the group-property checks: position plus covector
// discrepancy for like-kind points, a large sentinel across kinds.
double distance(const sym::PhasePoint& a, const sym::PhasePoint& b);

// One JSON record per line: segments first ({"type":"segment","kind":…,
// "s_start":…,"s_end":…,"samples":[[s,x…,xi…],…]}), then events
// ({"type":"event","s":…,"class":…,"action":…,"location":[…],"r_value":…,
// "dxd_r":…,"contact_order":…,"alpha_sign":…,"on_interface":…,"reason":…}),
// then one {"type":"summary",…} line. Field order is fixed.
void write_jsonl(const Trajectory& traj, std::ostream& out);
std::string to_jsonl(const Trajectory& traj);

}  // namespace zr::flow
