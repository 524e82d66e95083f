#include "zr/mgcc.hpp"

#include <atomic>
#include <cmath>
#include <ostream>
#include <random>
#include <thread>

#include "json.hpp"
#include "zr/errors.hpp"

namespace zr::mgcc {

namespace {

using Eigen::VectorXd;

// First damped sample along a trajectory, walking segments in traversal
// order. Detection resolution is the sampling cadence.
bool first_damped_sample(const flow::Trajectory& traj,
                         const DampingField& damping, double a_min,
                         double& s_hit) {
  for (const auto& seg : traj.segments)
    for (const auto& smp : seg.samples)
      if (damping(smp.state.x) > a_min) {
        s_hit = smp.s;
        return true;
      }
  return false;
}

std::string blocked_reason(const flow::Trajectory& traj, const char* leg) {
  std::string why = traj.termination_reason.empty() ? "incomplete trajectory"
                                                    : traj.termination_reason;
  return std::string(leg) + " leg: " + why;
}

Verdict judge(const geom::DomainSpec& dom, const geom::MetricField& metric,
              const DampingField& damping, double horizon,
              const sym::PhasePoint& seed, const MgccOptions& opts) {
  flow::FlowOptions fop = opts.flow;
  fop.sample_ds = opts.sample_ds;
  const bool singular = seed.kind == sym::PhasePoint::Kind::Interface;

  auto run = [&](double s_total) {
    return singular ? flow::evolve_on_gamma(dom, metric, seed, s_total, fop)
                    : flow::evolve(dom, metric, seed, s_total, fop);
  };

  Verdict v;
  try {
    if (damping(seed.x) > opts.a_min) {
      // Seeds footed inside the control region need no flow at all.
      v.kind = VerdictKind::Controlled;
      v.control_time = 0.0;
      return v;
    }
    const auto fwd = run(horizon);
    double s_fwd = 0.0;
    const bool hit_fwd = first_damped_sample(fwd, damping, opts.a_min, s_fwd);
    if (hit_fwd && s_fwd == 0.0) {
      v.kind = VerdictKind::Controlled;
      v.control_time = 0.0;
      return v;
    }

    // The backward leg only needs to beat the forward hit.
    const double back_horizon = hit_fwd ? std::min(horizon, s_fwd) : horizon;
    const auto bwd = run(-back_horizon);
    double s_bwd = 0.0;
    const bool hit_bwd = first_damped_sample(bwd, damping, opts.a_min, s_bwd);

    if (hit_fwd || hit_bwd) {
      v.kind = VerdictKind::Controlled;
      if (hit_fwd && (!hit_bwd || s_fwd <= -s_bwd))
        v.control_time = s_fwd;
      else
        v.control_time = s_bwd;
      return v;
    }
    if (fwd.complete && bwd.complete) {
      v.kind = VerdictKind::Failed;
      v.witness = fwd;
      return v;
    }
    v.kind = VerdictKind::Undetermined;
    v.reason = fwd.complete ? blocked_reason(bwd, "backward")
                            : blocked_reason(fwd, "forward");
    return v;
  } catch (const Error& e) {
    v.kind = VerdictKind::Undetermined;
    v.reason = e.what();
    return v;
  }
}

double golden_angle() { return M_PI * (3.0 - std::sqrt(5.0)); }

// B-normalized tangential frame at a boundary point: one unit tangential
// covector in d = 2, a pair spanning the tangential plane in d = 3.
std::vector<VectorXd> tangent_frame(const geom::DomainSpec& dom,
                                    const geom::MetricField& metric,
                                    const VectorXd& x) {
  const int d = dom.dim;
  std::vector<VectorXd> frame;
  for (int axis = 0; axis < d && static_cast<int>(frame.size()) < d - 1;
       ++axis) {
    VectorXd v = sym::tangential_part(dom, metric, x, VectorXd::Unit(d, axis));
    for (const auto& e : frame)
      v -= sym::pairing(metric, x, v, e) * e;
    const double n2 = sym::pairing(metric, x, v, v);
    if (n2 < 1e-12) continue;
    frame.push_back(v / std::sqrt(n2));
  }
  return frame;
}

void push_boundary_family(const geom::DomainSpec& dom,
                          const geom::MetricField& metric, int res,
                          double offset, std::vector<sym::PhasePoint>& out) {
  const int d = dom.dim;
  std::vector<VectorXd> positions;
  const int n_bpos = 2 * res;

  if (dom.catalog_id == "disc" || dom.catalog_id == "disc-exterior" ||
      dom.catalog_id == "annulus") {
    for (int k = 0; k < n_bpos; ++k) {
      const double t = offset + 2 * M_PI * k / n_bpos;
      positions.push_back(
          (VectorXd(2) << std::cos(t), std::sin(t)).finished());
      if (dom.catalog_id == "annulus")
        positions.push_back(dom.inner_radius * positions.back());
    }
  } else if (dom.catalog_id == "ball") {
    for (int k = 0; k < n_bpos; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / n_bpos;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double t = offset + k * golden_angle();
      positions.push_back(
          (VectorXd(3) << r * std::cos(t), r * std::sin(t), z).finished());
    }
  } else if (dom.catalog_id == "rectangle") {
    const double ax = dom.bbox_hi[0], ay = dom.bbox_hi[1];
    const double perim = 2 * (ax + ay);
    for (int k = 0; k < n_bpos; ++k) {
      double t = std::fmod(offset / (2 * M_PI) + static_cast<double>(k) / n_bpos,
                           1.0) *
                 perim;
      VectorXd x(2);
      if (t < ax)
        x << t, 0.0;
      else if (t < ax + ay)
        x << ax, t - ax;
      else if (t < 2 * ax + ay)
        x << 2 * ax + ay - t, ay;
      else
        x << 0.0, perim - t;
      if (!dom.near_corner(x)) positions.push_back(x);
    }
  } else if (dom.catalog_id == "halfspace") {
    for (int k = 0; k < n_bpos; ++k) {
      VectorXd x = VectorXd::Zero(d);
      x[0] = -1.0 + (2.0 * k + 1.0) / n_bpos;
      positions.push_back(x);
    }
  } else {
    // Generic level set: project inward from a bounding sphere.
    const VectorXd c = 0.5 * (dom.bbox_lo + dom.bbox_hi);
    for (int k = 0; k < n_bpos; ++k) {
      const double t = offset + 2 * M_PI * k / n_bpos;
      VectorXd dir = VectorXd::Zero(d);
      dir[0] = std::cos(t);
      dir[d - 1] = std::sin(t);
      try {
        positions.push_back(dom.project_to_boundary(c + dom.diameter * dir));
      } catch (const Error&) {
      }
    }
  }

  const int n_mag = std::max(2, res / 2);
  for (const auto& xb : positions) {
    const auto frame = tangent_frame(dom, metric, xb);
    if (frame.empty()) continue;
    std::vector<VectorXd> dirs;
    if (d == 2) {
      dirs.push_back(frame[0]);
      dirs.push_back(-frame[0]);
    } else {
      for (int k = 0; k < res; ++k) {
        const double t = offset + 2 * M_PI * k / res;
        dirs.push_back(std::cos(t) * frame[0] + std::sin(t) * frame[1]);
      }
    }
    for (int j = 1; j <= n_mag; ++j) {
      const double rho = std::sqrt(static_cast<double>(j) / n_mag);
      for (const auto& t : dirs) {
        // Store the full characteristic covector: the inward hyperbolic lift
        // below the glancing magnitude, the tangential covector at it.
        VectorXd xi = rho * t;
        if (j < n_mag) xi = sym::hyperbolic_lift(dom, metric, xb, xi, +1);
        out.push_back({sym::PhasePoint::Kind::Boundary, xb, std::move(xi)});
      }
    }
  }
}

void push_interface_family(const geom::DomainSpec& dom,
                           const geom::MetricField& metric, int res,
                           double offset, std::vector<sym::PhasePoint>& out) {
  // Characteristic covectors tangential to both the boundary and the
  // interface exist only when the interface has positive dimension, so in
  // this catalog the family is the equator of the ball. Planar interfaces
  // are isolated points (the rectangle's sit in corners) and carry none.
  if (dom.catalog_id != "ball") return;
  for (int k = 0; k < 2 * res; ++k) {
    const double t = offset + M_PI * k / res;
    const VectorXd x =
        (VectorXd(3) << std::cos(t), std::sin(t), 0.0).finished();
    const VectorXd tan =
        (VectorXd(3) << -std::sin(t), std::cos(t), 0.0).finished();
    const VectorXd xi = sym::characteristic_rescale(metric, x, tan);
    out.push_back(sym::make_interface(dom, metric, x, xi));
    out.push_back(sym::make_interface(dom, metric, x, -xi));
  }
}

}  // namespace

const char* verdict_name(VerdictKind v) {
  switch (v) {
    case VerdictKind::Controlled: return "controlled";
    case VerdictKind::Failed: return "failed";
    case VerdictKind::Undetermined: return "undetermined";
  }
  return "undetermined";
}

int MGCCReport::exit_code() const {
  if (failed > 0) return 1;
  if (undetermined > 0) return 2;
  return 0;
}

MGCCReport check_mgcc(const geom::DomainSpec& dom,
                      const geom::MetricField& metric,
                      const DampingField& damping, double horizon,
                      const std::vector<sym::PhasePoint>& seeds,
                      const MgccOptions& opts) {
  if (horizon <= 0.0) throw ConfigError("mgcc horizon must be positive");
  MGCCReport report;
  report.horizon = horizon;
  report.seed_count = static_cast<int>(seeds.size());
  report.per_seed.resize(seeds.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < seeds.size();
         i = next.fetch_add(1)) {
      report.per_seed[i].seed = seeds[i];
      report.per_seed[i].verdict =
          judge(dom, metric, damping, horizon, seeds[i], opts);
    }
  };

  const int n_threads =
      std::max(1, std::min<int>(opts.threads, static_cast<int>(seeds.size())));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  bool any = false;
  for (const auto& sr : report.per_seed) {
    switch (sr.verdict.kind) {
      case VerdictKind::Controlled: {
        ++report.controlled;
        const double c = std::abs(sr.verdict.control_time);
        if (!any || c < report.min_control_time) report.min_control_time = c;
        if (!any || c > report.max_control_time) report.max_control_time = c;
        any = true;
        break;
      }
      case VerdictKind::Failed: ++report.failed; break;
      case VerdictKind::Undetermined: ++report.undetermined; break;
    }
  }
  return report;
}

std::vector<sym::PhasePoint> seed_lattice(const geom::DomainSpec& dom,
                                          const geom::MetricField& metric,
                                          int resolution,
                                          const LatticeOptions& opts) {
  if (resolution < 1) throw ConfigError("lattice resolution must be >= 1");
  const int d = dom.dim;
  std::mt19937 rng(opts.rng_seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double offset_dir = 2 * M_PI * uni(rng);
  const double offset_bnd = 2 * M_PI * uni(rng);
  const double offset_ifc = 2 * M_PI * uni(rng);

  std::vector<sym::PhasePoint> out;
  const double margin = opts.interior_margin_scale * dom.diameter;

  std::vector<VectorXd> dirs;
  if (d == 1) {
    dirs.push_back(VectorXd::Constant(1, 1.0));
    dirs.push_back(VectorXd::Constant(1, -1.0));
  } else if (d == 2) {
    for (int k = 0; k < resolution; ++k) {
      const double t = offset_dir + 2 * M_PI * k / resolution;
      dirs.push_back((VectorXd(2) << std::cos(t), std::sin(t)).finished());
    }
  } else {
    const int n = 2 * resolution;
    for (int k = 0; k < n; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / n;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double t = offset_dir + k * golden_angle();
      dirs.push_back(
          (VectorXd(3) << r * std::cos(t), r * std::sin(t), z).finished());
    }
  }

  std::vector<int> idx(d, 0);
  while (true) {
    VectorXd x(d);
    for (int j = 0; j < d; ++j)
      x[j] = dom.bbox_lo[j] + (dom.bbox_hi[j] - dom.bbox_lo[j]) *
                                  (idx[j] + 0.5) / resolution;
    if (dom.phi(x) > margin)
      for (const auto& dir : dirs)
        out.push_back(sym::make_interior(
            x, sym::characteristic_rescale(metric, x, dir)));
    int j = 0;
    for (; j < d; ++j) {
      if (++idx[j] < resolution) break;
      idx[j] = 0;
    }
    if (j == d) break;
  }

  if (d >= 2) {
    push_boundary_family(dom, metric, resolution, offset_bnd, out);
    push_interface_family(dom, metric, resolution, offset_ifc, out);
  }
  return out;
}

void write_summary_json(const MGCCReport& report, std::ostream& out) {
  nlohmann::ordered_json j;
  j["horizon"] = report.horizon;
  j["seed_count"] = report.seed_count;
  j["controlled"] = report.controlled;
  j["failed"] = report.failed;
  j["undetermined"] = report.undetermined;
  j["min_control_time"] = report.min_control_time;
  j["max_control_time"] = report.max_control_time;
  j["exit_code"] = report.exit_code();
  out << j.dump() << "\n";
}

void write_seed_jsonl(const MGCCReport& report, std::ostream& out) {
  for (std::size_t i = 0; i < report.per_seed.size(); ++i) {
    const auto& sr = report.per_seed[i];
    nlohmann::ordered_json j;
    j["index"] = i;
    j["kind"] = sr.seed.kind == sym::PhasePoint::Kind::Interior ? "interior"
                : sr.seed.kind == sym::PhasePoint::Kind::Boundary
                    ? "boundary"
                    : "interface";
    j["x"] = std::vector<double>(sr.seed.x.data(),
                                 sr.seed.x.data() + sr.seed.x.size());
    j["xi"] = std::vector<double>(sr.seed.xi.data(),
                                  sr.seed.xi.data() + sr.seed.xi.size());
    j["verdict"] = verdict_name(sr.verdict.kind);
    switch (sr.verdict.kind) {
      case VerdictKind::Controlled:
        j["control_time"] = sr.verdict.control_time;
        break;
      case VerdictKind::Failed:
        j["witness_events"] = sr.verdict.witness.events.size();
        j["witness_s_end"] = sr.verdict.witness.s_end;
        break;
      case VerdictKind::Undetermined:
        j["reason"] = sr.verdict.reason;
        break;
    }
    out << j.dump() << "\n";
  }
}

}  // namespace zr::mgcc
