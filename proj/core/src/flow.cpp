#include "zr/flow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "zr/errors.hpp"
#include "zr/log.hpp"
#include "zr/ode.hpp"

namespace zr::flow {

namespace {

using Eigen::VectorXd;

// Absolute phi threshold that arms boundary-event localization; dips that
// stay above it are roundoff-sized grazes, not crossings.
constexpr double kTrigger = 1e-12;
// Band around psi = 0 within which a boundary event counts as touching the
// interface.
constexpr double kGammaBand = 1e-8;
// Events closer than this to an arc launch are the launch point re-detected.
constexpr double kLaunchGuard = 1e-9;

const char* kReasonInterface = "interface contact";
const char* kReasonUndetermined = "undetermined boundary contact";
const char* kReasonCorner = "corner contact";
const char* kReasonEventCap = "event cap reached";

sym::PhasePoint boundary_point(const geom::DomainSpec& dom,
                               const geom::MetricField& metric, VectorXd x,
                               const VectorXd& xi) {
  return sym::make_boundary(dom, metric, std::move(x), xi);
}

// Newton projection onto the interface {phi = 0, psi = 0}.
VectorXd project_to_gamma(const geom::DomainSpec& dom, VectorXd x) {
  for (int it = 0; it < 40; ++it) {
    const Eigen::Vector2d f(dom.phi(x), dom.psi(x));
    if (f.cwiseAbs().maxCoeff() < 1e-13) return x;
    Eigen::MatrixXd jt(x.size(), 2);
    jt.col(0) = dom.gradient_phi(x);
    jt.col(1) = dom.gradient_psi(x);
    const Eigen::Matrix2d gram = jt.transpose() * jt;
    if (std::abs(gram.determinant()) < 1e-14)
      throw DegenerateNormal("interface projection is degenerate");
    x -= jt * gram.fullPivLu().solve(f);
  }
  if (std::abs(dom.phi(x)) > 1e-9 || std::abs(dom.psi(x)) > 1e-9)
    throw NotOnBoundary("interface projection did not converge");
  return x;
}

class Engine {
 public:
  Engine(const geom::DomainSpec& dom, const geom::MetricField& metric,
         const FlowOptions& opts, double s_total)
      : dom_(dom),
        metric_(metric),
        opts_(opts),
        dir_(s_total >= 0 ? 1.0 : -1.0),
        tau_total_(std::abs(s_total)) {}

  Trajectory run(const sym::PhasePoint& seed);

 private:
  enum class Mode { Interior, Gliding, Done };

  const geom::DomainSpec& dom_;
  const geom::MetricField& metric_;
  const FlowOptions& opts_;
  const double dir_;
  const double tau_total_;

  Trajectory traj_;
  Mode mode_ = Mode::Done;
  double tau_ = 0.0;
  VectorXd x_, xi_;

  double phys(double tau) const { return dir_ * tau; }

  void record_event(double tau, VectorXd location,
                    sym::BoundaryClassification cls, EventAction action,
                    bool on_interface, std::string reason = {}) {
    traj_.events.push_back({phys(tau), std::move(location), std::move(cls),
                            action, on_interface, std::move(reason)});
  }

  void terminate(double tau, const VectorXd& location,
                 sym::BoundaryClassification cls, bool on_interface,
                 const char* reason) {
    record_event(tau, location, std::move(cls), EventAction::Terminate,
                 on_interface, reason);
    traj_.termination_reason = reason;
    mode_ = Mode::Done;
  }

  bool event_budget_ok(double tau, const VectorXd& location) {
    if (static_cast<int>(traj_.events.size()) < opts_.max_events) return true;
    terminate(tau, location, {}, false, kReasonEventCap);
    return false;
  }

  Segment& open_segment(SegmentKind kind, double tau,
                        const sym::PhasePoint& state) {
    traj_.segments.push_back({kind, phys(tau), phys(tau), {}});
    traj_.segments.back().samples.push_back({phys(tau), state});
    return traj_.segments.back();
  }

  static void push_sample(Segment& seg, double s, sym::PhasePoint state,
                          double cadence) {
    auto& samples = seg.samples;
    if (!samples.empty() && std::abs(s - samples.back().s) < cadence) return;
    samples.push_back({s, std::move(state)});
  }

  void close_segment(Segment& seg, double tau, sym::PhasePoint state) {
    seg.s_end = phys(tau);
    if (!seg.samples.empty() &&
        std::abs(seg.samples.back().s - seg.s_end) < 1e-15)
      seg.samples.back().state = std::move(state);
    else
      seg.samples.push_back({seg.s_end, std::move(state)});
  }

  // The glancing branch taxonomy in traversal time: positive means the free
  // ray lies inside for increasing internal time.
  bool interior_forward(int k, int alpha_sign) const {
    const double effective = k % 2 == 0 ? alpha_sign : alpha_sign * dir_;
    return effective > 0;
  }

  void start_from_boundary(const VectorXd& xb, const VectorXd& xi_tan);
  void handle_boundary_event(double tau, const VectorXd& x_raw,
                             const VectorXd& xi_raw);
  void interior_arc();
  void gliding_arc();
};

Trajectory Engine::run(const sym::PhasePoint& seed) {
  x_ = seed.x;
  xi_ = seed.xi;

  if (seed.kind == sym::PhasePoint::Kind::Interior) {
    if (std::abs(sym::symbol_p(metric_, x_, xi_)) > opts_.tol_char)
      throw Error("seed is not characteristic");
    xi_ = sym::characteristic_rescale(metric_, x_, xi_);
    if (dom_.phi(x_) < -10.0 * dom_.tol_band)
      throw Error("seed lies outside the domain");
    mode_ = Mode::Interior;
  } else {
    const VectorXd xb = dom_.project_to_boundary(x_);
    const VectorXd xt = sym::tangential_part(dom_, metric_, xb, xi_);
    x_ = xb;
    start_from_boundary(xb, xt);
  }

  while (mode_ != Mode::Done && tau_ < tau_total_ - 1e-15) {
    if (mode_ == Mode::Interior)
      interior_arc();
    else
      gliding_arc();
  }

  if (traj_.segments.empty()) {
    // Degenerate run (immediate termination or zero time): keep the seed
    // visible as a zero-length segment so the final state is well defined.
    const auto kind = seed.kind == sym::PhasePoint::Kind::Interior
                          ? SegmentKind::InteriorArc
                          : SegmentKind::GlidingArc;
    auto& seg = open_segment(kind, 0.0, seed);
    close_segment(seg, 0.0, seed);
  }
  traj_.s_end = traj_.segments.back().s_end;
  traj_.complete = tau_ >= tau_total_ - 1e-12 && traj_.termination_reason.empty();
  return traj_;
}

void Engine::start_from_boundary(const VectorXd& xb, const VectorXd& xi_tan) {
  sym::ClassifyOptions copt;
  copt.eps_glance = opts_.eps_glance;
  const auto cls = sym::classify_boundary(dom_, metric_, xb, xi_tan, copt);
  switch (cls.tag) {
    case sym::BoundaryTag::Hyperbolic:
      // Launch the characteristic lift that moves inward in traversal time.
      xi_ = sym::hyperbolic_lift(dom_, metric_, xb, xi_tan,
                                 dir_ >= 0 ? +1 : -1);
      mode_ = Mode::Interior;
      return;
    case sym::BoundaryTag::Elliptic:
      throw Error("boundary seed is elliptic, hence not characteristic");
    case sym::BoundaryTag::Diffractive:
      xi_ = sym::characteristic_rescale(metric_, xb, xi_tan);
      mode_ = Mode::Interior;
      return;
    case sym::BoundaryTag::Gliding:
      xi_ = sym::characteristic_rescale(metric_, xb, xi_tan);
      mode_ = Mode::Gliding;
      return;
    case sym::BoundaryTag::HigherGlancing:
      xi_ = sym::characteristic_rescale(metric_, xb, xi_tan);
      mode_ = interior_forward(cls.contact_order, cls.alpha_sign)
                  ? Mode::Interior
                  : Mode::Gliding;
      return;
    case sym::BoundaryTag::Undetermined:
      terminate(0.0, xb, cls, std::abs(dom_.psi(xb)) <= kGammaBand,
                kReasonUndetermined);
      return;
  }
}

void Engine::handle_boundary_event(double tau, const VectorXd& x_raw,
                                   const VectorXd& xi_raw) {
  VectorXd xb;
  try {
    xb = dom_.project_to_boundary(x_raw);
  } catch (const Error&) {
    xb = x_raw;
  }
  if (dom_.near_corner(xb)) {
    terminate(tau, xb, {}, false, kReasonCorner);
    return;
  }
  if (!event_budget_ok(tau, xb)) return;

  const bool on_gamma = std::abs(dom_.psi(xb)) <= kGammaBand;
  const VectorXd xi_tan = sym::tangential_part(dom_, metric_, xb, xi_raw);
  sym::ClassifyOptions copt;
  copt.eps_glance = opts_.eps_glance;
  const auto cls = sym::classify_boundary(dom_, metric_, xb, xi_tan, copt);

  if (on_gamma && !(opts_.gamma_policy == GammaPolicy::ContinueHyperbolic &&
                    cls.tag == sym::BoundaryTag::Hyperbolic)) {
    terminate(tau, xb, cls, true, kReasonInterface);
    return;
  }

  switch (cls.tag) {
    case sym::BoundaryTag::Hyperbolic: {
      record_event(tau, xb, cls, EventAction::Reflect, on_gamma);
      x_ = xb;
      xi_ = sym::reflect(dom_, metric_, xb, xi_raw);
      mode_ = Mode::Interior;
      return;
    }
    case sym::BoundaryTag::Diffractive: {
      record_event(tau, xb, cls, EventAction::EnterInterior, on_gamma);
      x_ = xb;
      xi_ = sym::characteristic_rescale(metric_, xb, xi_tan);
      mode_ = Mode::Interior;
      return;
    }
    case sym::BoundaryTag::Gliding: {
      record_event(tau, xb, cls, EventAction::EnterGliding, on_gamma);
      x_ = xb;
      xi_ = sym::characteristic_rescale(metric_, xb, xi_tan);
      mode_ = Mode::Gliding;
      return;
    }
    case sym::BoundaryTag::HigherGlancing: {
      const bool inward = interior_forward(cls.contact_order, cls.alpha_sign);
      record_event(tau, xb, cls,
                   inward ? EventAction::EnterInterior : EventAction::EnterGliding,
                   on_gamma);
      x_ = xb;
      xi_ = sym::characteristic_rescale(metric_, xb, xi_tan);
      mode_ = inward ? Mode::Interior : Mode::Gliding;
      return;
    }
    case sym::BoundaryTag::Elliptic:
      terminate(tau, xb, cls, on_gamma, "characteristic drift at a boundary event");
      return;
    case sym::BoundaryTag::Undetermined:
      terminate(tau, xb, cls, on_gamma, kReasonUndetermined);
      return;
  }
}

void Engine::interior_arc() {
  const int d = dom_.dim;
  ode::Options oo;
  oo.rtol = opts_.tol_ode;
  oo.atol = 0.01 * opts_.tol_ode;
  oo.h_max = 0.05;
  oo.h_init = 1e-4;
  ode::RhsFn rhs = [&](double, const VectorXd& y, VectorXd& dy) {
    VectorXd fx(d), fxi(d);
    sym::hamiltonian_field(metric_, y.head(d), y.tail(d), fx, fxi);
    dy.resize(2 * d);
    dy.head(d) = dir_ * fx;
    dy.tail(d) = dir_ * fxi;
  };
  ode::Dopri5 solver(rhs, oo);
  VectorXd y0(2 * d);
  y0.head(d) = x_;
  y0.tail(d) = xi_;
  const double tau_start = tau_;
  solver.start(tau_, y0);

  auto state_at = [&](const ode::DenseStep& seg, double t) {
    return seg.eval(std::clamp(t, seg.s0, seg.s1));
  };
  auto phi_of = [&](const VectorXd& y) { return dom_.phi(y.head(d)); };
  auto what_of = [&](const VectorXd& y) {
    return dir_ * sym::conormal_speed(dom_, metric_, y.head(d), y.tail(d));
  };

  auto& seg_rec = open_segment(
      SegmentKind::InteriorArc, tau_,
      sym::make_interior(x_, xi_));
  double next_sample = tau_start + opts_.sample_ds;
  auto emit_grid = [&](const ode::DenseStep& st, double upto) {
    while (next_sample <= upto + 1e-15) {
      const VectorXd y = state_at(st, next_sample);
      push_sample(seg_rec, phys(next_sample),
                  sym::make_interior(y.head(d), y.tail(d)),
                  0.5 * opts_.sample_ds);
      next_sample += opts_.sample_ds;
    }
  };

  while (tau_ < tau_total_ - 1e-15) {
    const ode::DenseStep& st = solver.step(tau_total_);
    const int kNodes = 16;
    double event_tau = -1.0;

    double t_prev = st.s0;
    VectorXd y_prev = state_at(st, t_prev);
    double phi_prev = phi_of(y_prev);
    double w_prev = what_of(y_prev);
    for (int i = 1; i <= kNodes; ++i) {
      const double t = st.s0 + (st.s1 - st.s0) * i / kNodes;
      const VectorXd y = state_at(st, t);
      const double phi = phi_of(y);
      const double w = what_of(y);
      const bool past_guard = t - tau_start > kLaunchGuard;
      if (phi < -kTrigger && past_guard) {
        // Transversal exit inside [t_prev, t].
        if (phi_prev <= 0.0) {
          event_tau = t_prev;
        } else {
          event_tau = ode::brent(
              [&](double tt) { return phi_of(state_at(st, tt)); }, t_prev, t,
              1e-13);
        }
        break;
      }
      if (w_prev < -1e-15 && w >= 0.0 && past_guard) {
        // Local minimum of phi inside the cell: check for a contained dip.
        const double t_min = ode::brent(
            [&](double tt) { return what_of(state_at(st, tt)); }, t_prev, t,
            1e-13);
        if (phi_of(state_at(st, t_min)) < -kTrigger) {
          event_tau = phi_prev <= 0.0
                          ? t_prev
                          : ode::brent(
                                [&](double tt) { return phi_of(state_at(st, tt)); },
                                t_prev, t_min, 1e-13);
          break;
        }
      }
      t_prev = t;
      y_prev = y;
      phi_prev = phi;
      w_prev = w;
    }

    if (event_tau >= 0.0) {
      emit_grid(st, event_tau - 1e-12);
      const VectorXd ye = state_at(st, event_tau);
      tau_ = event_tau;
      close_segment(seg_rec, tau_,
                    sym::make_interior(ye.head(d), ye.tail(d)));
      handle_boundary_event(tau_, ye.head(d), ye.tail(d));
      return;
    }

    tau_ = solver.s();
    emit_grid(st, st.s1);
  }

  tau_ = tau_total_;
  x_ = solver.y().head(d);
  xi_ = solver.y().tail(d);
  close_segment(seg_rec, tau_, sym::make_interior(x_, xi_));
  mode_ = Mode::Done;
  traj_.complete = true;
}

void Engine::gliding_arc() {
  const int d = dom_.dim;
  ode::Options oo;
  oo.rtol = opts_.tol_ode;
  oo.atol = 0.01 * opts_.tol_ode;
  oo.h_max = opts_.glide_ds;
  oo.h_init = 1e-4;
  ode::RhsFn rhs = [&](double, const VectorXd& y, VectorXd& dy) {
    VectorXd fx(d), fxi(d);
    sym::glide_field(dom_, metric_, y.head(d), y.tail(d), fx, fxi);
    dy.resize(2 * d);
    dy.head(d) = dir_ * fx;
    dy.tail(d) = dir_ * fxi;
  };

  auto project = [&](VectorXd& x, VectorXd& xi) {
    x = dom_.project_to_boundary(x);
    xi = sym::tangential_part(dom_, metric_, x, xi);
    xi = sym::characteristic_rescale(metric_, x, xi);
  };

  auto& seg_rec = open_segment(SegmentKind::GlidingArc, tau_,
                               boundary_point(dom_, metric_, x_, xi_));
  const double arc_start = tau_;
  double next_sample = arc_start + opts_.sample_ds;

  sym::ClassifyOptions copt;
  copt.eps_glance = opts_.eps_glance;

  while (tau_ < tau_total_ - 1e-15) {
    const double window = std::min(opts_.glide_ds, tau_total_ - tau_);
    ode::Dopri5 solver(rhs, oo);
    VectorXd y0(2 * d);
    y0.head(d) = x_;
    y0.tail(d) = xi_;
    solver.start(tau_, y0);
    std::vector<ode::DenseStep> dense;
    while (solver.s() < tau_ + window)
      dense.push_back(solver.step(tau_ + window));

    auto state_at = [&](double t) {
      for (const auto& sgm : dense)
        if (t <= sgm.s1 + 1e-15) return sgm.eval(std::clamp(t, sgm.s0, sgm.s1));
      return dense.back().eval(dense.back().s1);
    };
    auto psi_at = [&](double t) {
      const VectorXd y = state_at(t);
      return dom_.psi(y.head(d));
    };
    auto dxd_at = [&](double t) {
      const VectorXd y = state_at(t);
      const VectorXd xb = dom_.project_to_boundary(y.head(d));
      const VectorXd xt = sym::tangential_part(dom_, metric_, xb, y.tail(d));
      return sym::boundary_data(dom_, metric_, xb, xt).dxd_r;
    };
    auto emit_grid = [&](double upto) {
      while (next_sample <= upto + 1e-15) {
        const VectorXd y = state_at(next_sample);
        push_sample(seg_rec, phys(next_sample),
                    boundary_point(dom_, metric_, y.head(d), y.tail(d)),
                    0.5 * opts_.sample_ds);
        next_sample += opts_.sample_ds;
      }
    };

    // Walk the window in traversal order looking for corner contact and
    // interface crossings; either ends the arc under every policy (a gliding
    // crossing is not a hyperbolic one).
    const int kNodes = 32;
    double corner_tau = -1.0, gamma_tau = -1.0;
    double t_prev = tau_;
    double psi_prev = psi_at(t_prev);
    for (int i = 1; i <= kNodes; ++i) {
      const double t = tau_ + window * i / kNodes;
      const VectorXd xn = state_at(t).head(d);
      const double psi = psi_at(t);
      if ((psi_prev < 0) != (psi < 0)) {
        gamma_tau = ode::brent(psi_at, t_prev, t, 1e-13);
        break;
      }
      if (dom_.near_corner(xn)) {
        corner_tau = t;
        break;
      }
      t_prev = t;
      psi_prev = psi;
    }
    if (corner_tau >= 0.0) {
      const VectorXd y = state_at(corner_tau);
      VectorXd x = y.head(d), xi = y.tail(d);
      try {
        project(x, xi);
      } catch (const Error&) {
      }
      emit_grid(corner_tau - 1e-12);
      tau_ = corner_tau;
      close_segment(seg_rec, tau_, {sym::PhasePoint::Kind::Boundary, x, xi});
      terminate(tau_, x, {}, false, kReasonCorner);
      return;
    }
    if (gamma_tau >= 0.0) {
      const VectorXd y = state_at(gamma_tau);
      VectorXd x = y.head(d), xi = y.tail(d);
      project(x, xi);
      emit_grid(gamma_tau - 1e-12);
      tau_ = gamma_tau;
      close_segment(seg_rec, tau_, boundary_point(dom_, metric_, x, xi));
      if (!event_budget_ok(tau_, x)) return;
      sym::BoundaryClassification cls;
      try {
        cls = sym::classify_boundary(dom_, metric_, x, xi, copt);
      } catch (const Error&) {
      }
      terminate(tau_, x, cls, true, kReasonInterface);
      return;
    }

    const double dxd0 = dxd_at(tau_);
    const double dxd1 = dxd_at(tau_ + window);
    double leave_tau = -1.0;
    if (dxd1 < -opts_.eps_glance) {
      // The boundary turned away from the ray: locate the inflection and
      // re-enter the interior there tangentially.
      leave_tau = dxd0 > 0.0 ? ode::brent(dxd_at, tau_, tau_ + window, 1e-12)
                             : tau_;
    }

    if (leave_tau < 0.0 && std::abs(dxd1) <= opts_.eps_glance) {
      // Deep-glancing footpoint: consult the contact probe; leave only on a
      // branch whose free ray is interior in traversal time. An inconclusive
      // probe keeps gliding (the constraint manifold remains valid).
      const VectorXd y = state_at(tau_ + window);
      VectorXd x = y.head(d), xi = y.tail(d);
      project(x, xi);
      const auto cls = sym::classify_boundary(dom_, metric_, x, xi, copt);
      if (cls.tag == sym::BoundaryTag::Diffractive ||
          (cls.tag == sym::BoundaryTag::HigherGlancing &&
           interior_forward(cls.contact_order, cls.alpha_sign)))
        leave_tau = tau_ + window;
    }

    if (leave_tau >= 0.0) {
      const VectorXd y = state_at(leave_tau);
      VectorXd x = y.head(d), xi = y.tail(d);
      project(x, xi);
      emit_grid(leave_tau - 1e-12);
      tau_ = leave_tau;
      close_segment(seg_rec, tau_, boundary_point(dom_, metric_, x, xi));
      if (!event_budget_ok(tau_, x)) return;
      sym::BoundaryClassification cls;
      try {
        cls = sym::classify_boundary(dom_, metric_, x, xi, copt);
      } catch (const Error&) {
      }
      record_event(tau_, x, cls, EventAction::LeaveGliding,
                   std::abs(dom_.psi(x)) <= kGammaBand);
      x_ = x;
      xi_ = xi;
      mode_ = Mode::Interior;
      return;
    }

    VectorXd x = solver.y().head(d), xi = solver.y().tail(d);
    project(x, xi);
    x_ = x;
    xi_ = xi;
    tau_ += window;
    emit_grid(tau_);
  }

  tau_ = tau_total_;
  close_segment(seg_rec, tau_, boundary_point(dom_, metric_, x_, xi_));
  mode_ = Mode::Done;
  traj_.complete = true;
}

}  // namespace

const char* segment_kind_name(SegmentKind k) {
  switch (k) {
    case SegmentKind::InteriorArc: return "interior";
    case SegmentKind::GlidingArc: return "gliding";
    case SegmentKind::SingularArc: return "singular";
  }
  return "interior";
}

const char* event_action_name(EventAction a) {
  switch (a) {
    case EventAction::Reflect: return "reflect";
    case EventAction::EnterGliding: return "enter-gliding";
    case EventAction::LeaveGliding: return "leave-gliding";
    case EventAction::EnterInterior: return "enter-interior";
    case EventAction::Terminate: return "terminate";
  }
  return "terminate";
}

const sym::PhasePoint& Trajectory::final_state() const {
  if (segments.empty() || segments.back().samples.empty())
    throw Error("trajectory has no recorded states");
  return segments.back().samples.back().state;
}

FlowOptions FlowOptions::for_domain(const geom::DomainSpec& dom) {
  FlowOptions o;
  if (dom.catalog_id.empty()) o.tol_event = 1e-7;
  return o;
}

Trajectory evolve(const geom::DomainSpec& dom, const geom::MetricField& metric,
                  const sym::PhasePoint& seed, double s_total,
                  const FlowOptions& opts) {
  if (seed.kind == sym::PhasePoint::Kind::Interface)
    return evolve_on_gamma(dom, metric, seed, s_total, opts);
  Engine engine(dom, metric, opts, s_total);
  return engine.run(seed);
}

Trajectory evolve_on_gamma(const geom::DomainSpec& dom,
                           const geom::MetricField& metric,
                           const sym::PhasePoint& seed, double s_total,
                           const FlowOptions& opts) {
  const int d = dom.dim;
  sym::PhasePoint rho = seed.kind == sym::PhasePoint::Kind::Interface
                            ? seed
                            : sym::make_interface(dom, metric, seed.x, seed.xi);

  Trajectory traj;
  const double dir = s_total >= 0 ? 1.0 : -1.0;
  const double tau_total = std::abs(s_total);
  traj.segments.push_back({SegmentKind::SingularArc, 0.0, s_total, {}});
  auto& seg = traj.segments.back();
  seg.samples.push_back({0.0, rho});

  if (d <= 2 || tau_total == 0.0) {
    // Zero-dimensional tangential set: the singular flow is stationary and
    // the (zero) covector is exempt from the characteristic admission check.
    seg.samples.push_back({s_total, rho});
    traj.s_end = s_total;
    traj.complete = true;
    return traj;
  }

  if (std::abs(sym::symbol_p(metric, rho.x, rho.xi)) > opts.tol_char) {
    if (rho.xi.norm() < 1e-12)
      throw Error("interface seed has no tangential component");
    rho.xi = sym::characteristic_rescale(metric, rho.x, rho.xi);
    seg.samples.back().state = rho;
  }

  ode::Options oo;
  oo.rtol = opts.tol_ode;
  oo.atol = 0.01 * opts.tol_ode;
  oo.h_max = 0.05;
  ode::RhsFn rhs = [&](double, const VectorXd& y, VectorXd& dy) {
    VectorXd fx(d), fxi(d);
    sym::interface_field(dom, metric, y.head(d), y.tail(d), fx, fxi);
    dy.resize(2 * d);
    dy.head(d) = dir * fx;
    dy.tail(d) = dir * fxi;
  };
  ode::Dopri5 solver(rhs, oo);
  VectorXd y0(2 * d);
  y0.head(d) = rho.x;
  y0.tail(d) = rho.xi;
  solver.start(0.0, y0);

  double tau = 0.0;
  double last_proj = 0.0;
  double next_sample = opts.sample_ds;
  VectorXd x = rho.x, xi = rho.xi;
  while (tau < tau_total - 1e-15) {
    const auto& st = solver.step(tau_total);
    tau = solver.s();
    x = solver.y().head(d);
    xi = solver.y().tail(d);
    while (next_sample <= tau + 1e-15) {
      const VectorXd ys = st.eval(std::clamp(next_sample, st.s0, st.s1));
      seg.samples.push_back({dir * next_sample,
                             {sym::PhasePoint::Kind::Interface, ys.head(d),
                              ys.tail(d)}});
      next_sample += opts.sample_ds;
    }
    if (tau - last_proj > 0.25 || tau >= tau_total - 1e-15) {
      // Re-anchor onto the interface and its doubly-tangential covectors.
      x = project_to_gamma(dom, x);
      const auto fixed = sym::make_interface(dom, metric, x, xi);
      xi = sym::characteristic_rescale(metric, x, fixed.xi);
      VectorXd ynew(2 * d);
      ynew.head(d) = x;
      ynew.tail(d) = xi;
      solver.start(tau, ynew);
      last_proj = tau;
    }
  }
  if (std::abs(seg.samples.back().s - s_total) > 1e-15)
    seg.samples.push_back({s_total, {sym::PhasePoint::Kind::Interface, x, xi}});
  else
    seg.samples.back().state = {sym::PhasePoint::Kind::Interface, x, xi};
  seg.s_end = s_total;
  traj.s_end = s_total;
  traj.complete = true;
  return traj;
}

sym::PhasePoint time_reverse(const sym::PhasePoint& p) {
  sym::PhasePoint out = p;
  out.xi = -out.xi;
  return out;
}

double distance(const sym::PhasePoint& a, const sym::PhasePoint& b) {
  if (a.kind != b.kind) return 1e9;
  return (a.x - b.x).norm() + (a.xi - b.xi).norm();
}

void write_jsonl(const Trajectory& traj, std::ostream& out) {
  using nlohmann::ordered_json;
  for (const auto& seg : traj.segments) {
    ordered_json rec;
    rec["type"] = "segment";
    rec["kind"] = segment_kind_name(seg.kind);
    rec["s_start"] = seg.s_start;
    rec["s_end"] = seg.s_end;
    ordered_json samples = ordered_json::array();
    for (const auto& smp : seg.samples) {
      ordered_json row = ordered_json::array();
      row.push_back(smp.s);
      for (int i = 0; i < smp.state.x.size(); ++i) row.push_back(smp.state.x[i]);
      for (int i = 0; i < smp.state.xi.size(); ++i)
        row.push_back(smp.state.xi[i]);
      samples.push_back(std::move(row));
    }
    rec["samples"] = std::move(samples);
    out << rec.dump() << "\n";
  }
  for (const auto& ev : traj.events) {
    ordered_json rec;
    rec["type"] = "event";
    rec["s"] = ev.s;
    rec["class"] = sym::tag_name(ev.classification.tag);
    rec["action"] = event_action_name(ev.action);
    ordered_json loc = ordered_json::array();
    for (int i = 0; i < ev.location.size(); ++i) loc.push_back(ev.location[i]);
    rec["location"] = std::move(loc);
    rec["r_value"] = ev.classification.r_value;
    rec["dxd_r"] = ev.classification.dxd_r;
    rec["contact_order"] = ev.classification.contact_order;
    rec["alpha_sign"] = ev.classification.alpha_sign;
    rec["on_interface"] = ev.on_interface;
    rec["reason"] = ev.reason;
    out << rec.dump() << "\n";
  }
  ordered_json tail;
  tail["type"] = "summary";
  tail["s_end"] = traj.s_end;
  tail["complete"] = traj.complete;
  tail["segments"] = traj.segments.size();
  tail["events"] = traj.events.size();
  tail["termination_reason"] = traj.termination_reason;
  out << tail.dump() << "\n";
}

std::string to_jsonl(const Trajectory& traj) {
  std::ostringstream os;
  write_jsonl(traj, os);
  return os.str();
}

}  // namespace zr::flow
