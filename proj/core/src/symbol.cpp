#include "zr/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "zr/errors.hpp"
#include "zr/ode.hpp"

namespace zr::sym {

namespace {

constexpr double kNormalFloor = 1e-14;

// 4th-order central differences of a scalar function of x.
Eigen::VectorXd fd_gradient_x(const std::function<double(const Eigen::VectorXd&)>& f,
                              const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd g(n);
  Eigen::VectorXd xp = x;
  for (int i = 0; i < n; ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x[i]));
    const double xi = x[i];
    xp[i] = xi + 2 * h;
    const double fpp = f(xp);
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi - 2 * h;
    const double fmm = f(xp);
    xp[i] = xi;
    g[i] = (-fpp + 8 * fp - 8 * fm + fmm) / (12 * h);
  }
  return g;
}

double boundary_tol(const geom::DomainSpec& dom) {
  return std::max(10.0 * dom.tol_band, 1e-6);
}

}  // namespace

PhasePoint make_interior(Eigen::VectorXd x, Eigen::VectorXd xi) {
  return {PhasePoint::Kind::Interior, std::move(x), std::move(xi)};
}

PhasePoint make_boundary(const geom::DomainSpec& dom,
                         const geom::MetricField& metric, Eigen::VectorXd x,
                         const Eigen::VectorXd& xi) {
  if (std::abs(dom.phi(x)) > boundary_tol(dom))
    throw NotOnBoundary("phase point is not on the boundary");
  Eigen::VectorXd t = tangential_part(dom, metric, x, xi);
  return {PhasePoint::Kind::Boundary, std::move(x), std::move(t)};
}

PhasePoint make_interface(const geom::DomainSpec& dom,
                          const geom::MetricField& metric, Eigen::VectorXd x,
                          const Eigen::VectorXd& xi) {
  if (std::abs(dom.phi(x)) > boundary_tol(dom) ||
      std::abs(dom.psi(x)) > boundary_tol(dom))
    throw NotOnBoundary("phase point is not on the interface");
  const Eigen::VectorXd np = dom.gradient_phi(x);
  const Eigen::VectorXd ns = dom.gradient_psi(x);
  Eigen::Matrix2d gram;
  gram << pairing(metric, x, np, np), pairing(metric, x, ns, np),
      pairing(metric, x, np, ns), pairing(metric, x, ns, ns);
  if (std::abs(gram.determinant()) < kNormalFloor)
    throw DegenerateNormal("interface conormals are degenerate");
  const Eigen::Vector2d rhs(pairing(metric, x, xi, np),
                            pairing(metric, x, xi, ns));
  const Eigen::Vector2d c = gram.fullPivLu().solve(rhs);
  Eigen::VectorXd t = xi - c[0] * np - c[1] * ns;
  return {PhasePoint::Kind::Interface, std::move(x), std::move(t)};
}

double symbol_p(const geom::MetricField& metric, const Eigen::VectorXd& x,
                const Eigen::VectorXd& xi) {
  return xi.dot(metric.principal_at(x) * xi) - 1.0;
}

void hamiltonian_field(const geom::MetricField& metric, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& xi, Eigen::VectorXd& dx,
                       Eigen::VectorXd& dxi) {
  dx = 2.0 * (metric.principal_at(x) * xi);
  if (metric.flat) {
    dxi = Eigen::VectorXd::Zero(x.size());
    return;
  }
  dxi = -fd_gradient_x(
      [&](const Eigen::VectorXd& xx) { return xi.dot(metric.principal_at(xx) * xi); },
      x);
}

double pairing(const geom::MetricField& metric, const Eigen::VectorXd& x,
               const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(metric.principal_at(x) * b);
}

Eigen::VectorXd tangential_part(const geom::DomainSpec& dom,
                                const geom::MetricField& metric,
                                const Eigen::VectorXd& x,
                                const Eigen::VectorXd& xi) {
  const Eigen::VectorXd n = dom.gradient_phi(x);
  const double nn = pairing(metric, x, n, n);
  if (nn < kNormalFloor)
    throw DegenerateNormal("boundary conormal is degenerate");
  return xi - (pairing(metric, x, xi, n) / nn) * n;
}

Eigen::VectorXd reflect(const geom::DomainSpec& dom,
                        const geom::MetricField& metric,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
  const Eigen::VectorXd n = dom.gradient_phi(x);
  const double nn = pairing(metric, x, n, n);
  if (nn < kNormalFloor)
    throw DegenerateNormal("boundary conormal is degenerate");
  return xi - (2.0 * pairing(metric, x, xi, n) / nn) * n;
}

double conormal_speed(const geom::DomainSpec& dom,
                      const geom::MetricField& metric, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& xi) {
  return 2.0 * pairing(metric, x, xi, dom.gradient_phi(x));
}

Eigen::VectorXd hyperbolic_lift(const geom::DomainSpec& dom,
                                const geom::MetricField& metric,
                                const Eigen::VectorXd& x,
                                const Eigen::VectorXd& xi_tan, int direction) {
  const double r = symbol_p(metric, x, xi_tan);
  if (r > 0.0)
    throw Error("hyperbolic lift requested at an elliptic boundary point");
  const Eigen::VectorXd n = dom.gradient_phi(x);
  const double nn = pairing(metric, x, n, n);
  if (nn < kNormalFloor)
    throw DegenerateNormal("boundary conormal is degenerate");
  const double s = direction >= 0 ? 1.0 : -1.0;
  return xi_tan + s * std::sqrt(-r) / std::sqrt(nn) * n;
}

Eigen::VectorXd characteristic_rescale(const geom::MetricField& metric,
                                       const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& xi) {
  const double q = pairing(metric, x, xi, xi);
  if (q < kNormalFloor) throw Error("cannot rescale a null covector onto the characteristic set");
  return xi / std::sqrt(q);
}

BoundaryData boundary_data(const geom::DomainSpec& dom,
                           const geom::MetricField& metric,
                           const Eigen::VectorXd& x,
                           const Eigen::VectorXd& xi_tan) {
  const Eigen::VectorXd xi_t = tangential_part(dom, metric, x, xi_tan);
  const Eigen::VectorXd n = dom.gradient_phi(x);
  const double nn = pairing(metric, x, n, n);

  BoundaryData out;
  out.r_value = symbol_p(metric, x, xi_t);

  // Normal derivative of the tangential symbol through the double bracket
  // of p with phi, rescaled by the conormal length so it matches the
  // unit-normal chart convention.
  Eigen::VectorXd hx, hxi;
  hamiltonian_field(metric, x, xi_t, hx, hxi);
  const auto conormal_rate = [&](const Eigen::VectorXd& xx) {
    return 2.0 * pairing(metric, xx, xi_t, dom.gradient_phi(xx));
  };
  const Eigen::VectorXd dW_dx = fd_gradient_x(conormal_rate, x);
  const Eigen::VectorXd dW_dxi = 2.0 * (metric.principal_at(x) * n);
  const double pW = hx.dot(dW_dx) + hxi.dot(dW_dxi);
  out.dxd_r = -pW / (2.0 * std::sqrt(nn));
  return out;
}

ReducedSymbol reduced_symbol(const geom::Chart& chart,
                             const geom::MetricField& metric,
                             const Eigen::VectorXd& y_tan, double x_d,
                             const Eigen::VectorXd& eta_tan) {
  const int d = chart.dim();
  const auto r_of = [&](double t) {
    Eigen::VectorXd y(d);
    y.head(d - 1) = y_tan;
    y[d - 1] = t;
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(d);
    eta.head(d - 1) = eta_tan;
    return symbol_p(metric, chart.to_ambient(y), chart.covector_to_ambient(y, eta)) + 1.0;
  };
  ReducedSymbol out;
  out.r = r_of(x_d);
  const double h = 1e-5 * (1.0 + std::abs(x_d));
  out.dxd_r = (-r_of(x_d + 2 * h) + 8 * r_of(x_d + h) - 8 * r_of(x_d - h) +
               r_of(x_d - 2 * h)) /
              (12 * h);
  return out;
}

void chart_hamiltonian(const geom::Chart& chart, const geom::MetricField& metric,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                       Eigen::VectorXd& dy, Eigen::VectorXd& deta) {
  const auto q = [&](const Eigen::VectorXd& yy, const Eigen::VectorXd& ee) {
    return symbol_p(metric, chart.to_ambient(yy), chart.covector_to_ambient(yy, ee));
  };
  dy = fd_gradient_x([&](const Eigen::VectorXd& ee) { return q(y, ee); }, eta);
  deta = -fd_gradient_x([&](const Eigen::VectorXd& yy) { return q(yy, eta); }, y);
}

const char* tag_name(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::Hyperbolic: return "hyperbolic";
    case BoundaryTag::Elliptic: return "elliptic";
    case BoundaryTag::Diffractive: return "diffractive";
    case BoundaryTag::Gliding: return "gliding";
    case BoundaryTag::HigherGlancing: return "higher-glancing";
    case BoundaryTag::Undetermined: return "undetermined";
  }
  return "undetermined";
}

namespace {

struct DirFit {
  bool ok = false;
  int k = 0;
  int sign = 0;
  double mag = 0.0;
  double err = 0.0;
  double defect = std::numeric_limits<double>::quiet_NaN();
};

// Integrates the free flow away from a glancing point and fits the exponent
// of the boundary distance against arc length on a log-log scale. The
// distance proxy is phi divided by the pointwise conormal length, which
// agrees with the unit-normal coordinate to leading order.
DirFit probe_direction(const geom::DomainSpec& dom, const geom::MetricField& metric,
                       const Eigen::VectorXd& x0, const Eigen::VectorXd& xi0,
                       const ClassifyOptions& opts, double time_sign) {
  const int d = dom.dim;
  ode::Options oo;
  oo.rtol = 1e-12;
  oo.atol = 1e-14;
  oo.h_init = opts.s_probe * 1e-3;
  oo.h_max = opts.s_probe;
  ode::RhsFn rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    Eigen::VectorXd dx(d), dxi(d);
    hamiltonian_field(metric, y.head(d), y.segment(d, d), dx, dxi);
    dy.resize(2 * d + 1);
    dy.head(d) = time_sign * dx;
    dy.segment(d, d) = time_sign * dxi;
    dy[2 * d] = dx.norm();  // ambient arc length, parameter-direction free
  };
  ode::Dopri5 solver(rhs, oo);
  Eigen::VectorXd y0(2 * d + 1);
  y0.head(d) = x0;
  y0.segment(d, d) = xi0;
  y0[2 * d] = 0.0;
  solver.start(0.0, y0);
  std::vector<ode::DenseStep> segs;
  while (solver.s() < opts.s_probe) segs.push_back(solver.step(opts.s_probe));
  if (segs.empty()) return {};

  std::vector<double> us, vs;
  int lead_sign = 0;
  std::size_t seg_at = segs.size() - 1;  // samples descend, so this only moves left
  for (int j = 0; j <= 40; ++j) {
    const double sj = opts.s_probe * std::pow(0.5, j);
    while (seg_at > 0 && segs[seg_at].s0 > sj) --seg_at;
    const ode::DenseStep& seg = segs[seg_at];
    const Eigen::VectorXd st = seg.eval(std::clamp(sj, seg.s0, seg.s1));
    const double arc = st[2 * d];
    const Eigen::VectorXd xx = st.head(d);
    const Eigen::VectorXd g = dom.gradient_phi(xx);
    const double a = std::sqrt(std::max(pairing(metric, xx, g, g), kNormalFloor));
    const double xd = dom.phi(xx) / a;
    if (arc < 1e-13 || std::abs(xd) < opts.noise_floor) continue;
    if (us.empty()) lead_sign = xd > 0 ? 1 : -1;
    us.push_back(std::log(arc));
    vs.push_back(std::log(std::abs(xd)));
  }

  const int n = static_cast<int>(us.size());
  if (n < 4) return {};
  if (us.front() - us.back() < 1.5) return {};  // need a couple of octaves

  double um = 0, vm = 0;
  for (int i = 0; i < n; ++i) um += us[i], vm += vs[i];
  um /= n;
  vm /= n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (us[i] - um) * (us[i] - um);
    sxy += (us[i] - um) * (vs[i] - vm);
  }
  const double slope = sxy / sxx;
  const double icpt = vm - slope * um;
  double ssr = 0;
  for (int i = 0; i < n; ++i) {
    const double r = vs[i] - icpt - slope * us[i];
    ssr += r * r;
  }
  const double s2 = ssr / std::max(1, n - 2);
  const double se_icpt = std::sqrt(s2 * (1.0 / n + um * um / sxx));

  DirFit fit;
  fit.k = static_cast<int>(std::lround(slope));
  fit.defect = std::abs(slope - fit.k);
  fit.sign = lead_sign;
  fit.mag = std::exp(icpt);
  fit.err = fit.mag * se_icpt;
  fit.ok = fit.k >= 1 && fit.k <= opts.k_max && fit.defect <= 0.1;
  return fit;
}

}  // namespace

BoundaryClassification classify_boundary(const geom::DomainSpec& dom,
                                         const geom::MetricField& metric,
                                         const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& xi_tan,
                                         const ClassifyOptions& opts) {
  if (std::abs(dom.phi(x)) > boundary_tol(dom))
    throw NotOnBoundary("classification point is not on the boundary");
  const Eigen::VectorXd xi_t = tangential_part(dom, metric, x, xi_tan);
  const BoundaryData bd = boundary_data(dom, metric, x, xi_t);

  BoundaryClassification cls;
  cls.r_value = bd.r_value;
  cls.dxd_r = bd.dxd_r;

  const bool r_glancing = std::abs(bd.r_value) <= opts.eps_glance;
  bool deep = false;
  if (!r_glancing) {
    cls.tag = bd.r_value < 0 ? BoundaryTag::Hyperbolic : BoundaryTag::Elliptic;
  } else if (std::abs(bd.dxd_r) > opts.eps_glance) {
    cls.tag = bd.dxd_r < 0 ? BoundaryTag::Diffractive : BoundaryTag::Gliding;
    cls.contact_order = 2;
    cls.alpha_sign = bd.dxd_r < 0 ? 1 : -1;
  } else {
    deep = true;
  }

  const bool run_probe =
      opts.probe == ClassifyOptions::Probe::Always
          ? r_glancing
          : (opts.probe == ClassifyOptions::Probe::Auto && deep);
  if (!run_probe) return cls;

  const DirFit fwd = probe_direction(dom, metric, x, xi_t, opts, +1.0);
  const DirFit bwd = probe_direction(dom, metric, x, xi_t, opts, -1.0);

  int k = 0, sign = 0;
  double mag = 0, err = 0, defect = std::numeric_limits<double>::quiet_NaN();
  bool consistent = false;
  if (fwd.ok && bwd.ok) {
    const bool parity_ok =
        fwd.k == bwd.k &&
        (fwd.k % 2 == 0 ? fwd.sign == bwd.sign : fwd.sign == -bwd.sign);
    if (parity_ok) {
      consistent = true;
      k = fwd.k;
      sign = fwd.sign;
      mag = 0.5 * (fwd.mag + bwd.mag);
      err = 0.5 * (fwd.err + bwd.err);
      defect = std::max(fwd.defect, bwd.defect);
    }
  } else if (fwd.ok) {
    consistent = true;
    k = fwd.k;
    sign = fwd.sign;
    mag = fwd.mag;
    err = fwd.err;
    defect = fwd.defect;
  } else if (bwd.ok) {
    consistent = true;
    k = bwd.k;
    sign = bwd.k % 2 == 0 ? bwd.sign : -bwd.sign;
    mag = bwd.mag;
    err = bwd.err;
    defect = bwd.defect;
  }

  if (consistent) {
    cls.contact_order = k;
    cls.alpha_sign = sign;
    cls.alpha = sign * mag;
    cls.alpha_err = err;
    cls.slope_defect = defect;
  }
  if (!deep) return cls;

  if (!consistent) {
    cls.tag = BoundaryTag::Undetermined;
  } else if (k == 2) {
    cls.tag = sign < 0 ? BoundaryTag::Gliding : BoundaryTag::Diffractive;
  } else if (k >= 3) {
    cls.tag = BoundaryTag::HigherGlancing;
  } else {
    cls.tag = BoundaryTag::Undetermined;
  }
  return cls;
}

void glide_field(const geom::DomainSpec& dom, const geom::MetricField& metric,
                 const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                 Eigen::VectorXd& dx, Eigen::VectorXd& dxi) {
  Eigen::VectorXd hx, hxi;
  hamiltonian_field(metric, x, xi, hx, hxi);
  const Eigen::VectorXd n = dom.gradient_phi(x);
  const double nn = pairing(metric, x, n, n);
  if (nn < kNormalFloor)
    throw DegenerateNormal("boundary conormal is degenerate");

  const auto conormal_rate = [&](const Eigen::VectorXd& xx) {
    return 2.0 * pairing(metric, xx, xi, dom.gradient_phi(xx));
  };
  const Eigen::VectorXd dW_dx = fd_gradient_x(conormal_rate, x);
  const Eigen::VectorXd dW_dxi = 2.0 * (metric.principal_at(x) * n);
  const double pW = hx.dot(dW_dx) + hxi.dot(dW_dxi);

  // Coefficient that keeps both phi and the conormal rate invariant; the
  // correction acts along the boundary Hamiltonian (0, -grad phi).
  const double c = pW / (2.0 * nn);
  dx = hx;
  dxi = hxi - c * n;
}

void interface_field(const geom::DomainSpec& dom,
                     const geom::MetricField& metric, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& xi, Eigen::VectorXd& dx,
                     Eigen::VectorXd& dxi) {
  const int d = dom.dim;
  if (d <= 2) {
    // The doubly-tangential set over the interface carries no flow
    // directions in dimension two; the field degenerates to zero.
    dx = Eigen::VectorXd::Zero(d);
    dxi = Eigen::VectorXd::Zero(d);
    return;
  }
  Eigen::VectorXd hx, hxi;
  hamiltonian_field(metric, x, xi, hx, hxi);
  const Eigen::VectorXd np = dom.gradient_phi(x);
  const Eigen::VectorXd ns = dom.gradient_psi(x);
  const Eigen::MatrixXd P = metric.principal_at(x);

  const auto rate_p = [&](const Eigen::VectorXd& xx) {
    return 2.0 * pairing(metric, xx, xi, dom.gradient_phi(xx));
  };
  const auto rate_s = [&](const Eigen::VectorXd& xx) {
    return 2.0 * pairing(metric, xx, xi, dom.gradient_psi(xx));
  };
  const Eigen::VectorXd dWp_dx = fd_gradient_x(rate_p, x);
  const Eigen::VectorXd dWp_dxi = 2.0 * (P * np);
  const Eigen::VectorXd dWs_dx = fd_gradient_x(rate_s, x);
  const Eigen::VectorXd dWs_dxi = 2.0 * (P * ns);

  const double pWp = hx.dot(dWp_dx) + hxi.dot(dWp_dxi);
  const double pWs = hx.dot(dWs_dx) + hxi.dot(dWs_dxi);

  Eigen::Matrix2d m;
  m << -np.dot(dWp_dxi), -ns.dot(dWp_dxi), -np.dot(dWs_dxi), -ns.dot(dWs_dxi);
  if (std::abs(m.determinant()) < kNormalFloor)
    throw DegenerateNormal("interface conormals are degenerate");
  const Eigen::Vector2d ab = m.fullPivLu().solve(Eigen::Vector2d(-pWp, -pWs));

  dx = hx;
  dxi = hxi - ab[0] * np - ab[1] * ns;
}

}  // namespace zr::sym
