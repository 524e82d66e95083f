#include "zr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "zr/ode.hpp"

namespace zr::geom {
namespace {

constexpr double kGradFloor = 1e-8;

// 4th-order central difference of a scalar field.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x) {
  const double h = 1e-5 * (1.0 + x.norm());
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + 2 * h;
    const double f2p = f(xp);
    xp[i] = xi + h;
    const double f1p = f(xp);
    xp[i] = xi - h;
    const double f1m = f(xp);
    xp[i] = xi - 2 * h;
    const double f2m = f(xp);
    xp[i] = xi;
    g[i] = (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * h);
  }
  return g;
}

}  // namespace

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

// ---------------------------------------------------------------------------
// MetricField

MetricField MetricField::euclidean(int dim) {
  MetricField m;
  m.dim = dim;
  m.flat = true;
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(dim, dim);
  m.principal = [id](const Eigen::VectorXd&) { return id; };
  return m;
}

MetricField MetricField::constant_diagonal(const Eigen::VectorXd& coeffs) {
  MetricField m;
  m.dim = static_cast<int>(coeffs.size());
  m.flat = false;
  Eigen::MatrixXd p = coeffs.asDiagonal();
  m.principal = [p](const Eigen::VectorXd&) { return p; };
  return m;
}

Eigen::MatrixXd MetricField::principal_at(const Eigen::VectorXd& x) const {
  return principal(x);
}

void MetricField::validate_at(const Eigen::VectorXd& x) const {
  const Eigen::MatrixXd p = principal(x);
  const double asym = (p - p.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12)
    throw Error("metric: principal part asymmetric by " + std::to_string(asym));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw Error("metric: principal part not positive definite");
}

// ---------------------------------------------------------------------------
// DomainSpec catalog

DomainSpec DomainSpec::interval() {
  DomainSpec d;
  d.dim = 1;
  d.catalog_id = "interval";
  d.phi = [](const Eigen::VectorXd& x) { return std::min(x[0], 1.0 - x[0]); };
  d.grad_phi = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(1);
    g[0] = x[0] < 0.5 ? 1.0 : -1.0;
    return g;
  };
  d.psi = [](const Eigen::VectorXd& x) { return x[0] - 0.5; };
  d.grad_psi = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1).eval(); };
  d.bbox_lo = Eigen::VectorXd::Constant(1, 0.0);
  d.bbox_hi = Eigen::VectorXd::Constant(1, 1.0);
  d.diameter = 1.0;
  return d;
}

DomainSpec DomainSpec::halfspace(int dim) {
  DomainSpec d;
  d.dim = dim;
  d.catalog_id = "halfspace";
  d.phi = [dim](const Eigen::VectorXd& x) { return x[dim - 1]; };
  d.grad_phi = [dim](const Eigen::VectorXd&) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    g[dim - 1] = 1.0;
    return g;
  };
  d.psi = [dim](const Eigen::VectorXd& x) { return dim >= 2 ? x[0] : 1.0; };
  d.grad_psi = [dim](const Eigen::VectorXd&) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    if (dim >= 2) g[0] = 1.0;
    return g;
  };
  d.bbox_lo = Eigen::VectorXd::Constant(dim, -1.0);
  d.bbox_hi = Eigen::VectorXd::Constant(dim, 1.0);
  d.bbox_lo[dim - 1] = 0.0;
  d.bbox_hi[dim - 1] = 2.0;
  d.diameter = 2.0;
  return d;
}

DomainSpec DomainSpec::rectangle(double ax, double ay) {
  DomainSpec d;
  d.dim = 2;
  d.catalog_id = "rectangle";
  d.phi = [ax, ay](const Eigen::VectorXd& x) {
    return std::min(std::min(x[0], ax - x[0]), std::min(x[1], ay - x[1]));
  };
  d.grad_phi = [ax, ay](const Eigen::VectorXd& x) {
    const double c[4] = {x[0], ax - x[0], x[1], ay - x[1]};
    int best = 0;
    for (int i = 1; i < 4; ++i)
      if (c[i] < c[best]) best = i;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
    switch (best) {
      case 0: g[0] = 1.0; break;
      case 1: g[0] = -1.0; break;
      case 2: g[1] = 1.0; break;
      default: g[1] = -1.0; break;
    }
    return g;
  };
  // Dirichlet on the x-extremal edges, Neumann on the y-extremal ones; the
  // interface degenerates to the four corners.
  d.psi = [ax, ay](const Eigen::VectorXd& x) {
    return std::min(x[0], ax - x[0]) - std::min(x[1], ay - x[1]);
  };
  d.grad_psi = [ax, ay](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(2);
    g[0] = x[0] < 0.5 * ax ? 1.0 : -1.0;
    g[1] = x[1] < 0.5 * ay ? -1.0 : 1.0;
    return g;
  };
  for (double cx : {0.0, ax})
    for (double cy : {0.0, ay})
      d.corners.push_back((Eigen::VectorXd(2) << cx, cy).finished());
  d.bbox_lo = Eigen::VectorXd::Zero(2);
  d.bbox_hi = (Eigen::VectorXd(2) << ax, ay).finished();
  d.diameter = std::hypot(ax, ay);
  return d;
}

DomainSpec DomainSpec::disc() {
  DomainSpec d;
  d.dim = 2;
  d.catalog_id = "disc";
  d.phi = [](const Eigen::VectorXd& x) { return 0.5 * (1.0 - x.squaredNorm()); };
  d.grad_phi = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  d.psi = [](const Eigen::VectorXd& x) { return x[0]; };
  d.grad_psi = [](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Unit(2, 0).eval();
  };
  d.bbox_lo = Eigen::VectorXd::Constant(2, -1.0);
  d.bbox_hi = Eigen::VectorXd::Constant(2, 1.0);
  d.diameter = 2.0;
  return d;
}

DomainSpec DomainSpec::disc_exterior() {
  DomainSpec d;
  d.dim = 2;
  d.catalog_id = "disc-exterior";
  d.phi = [](const Eigen::VectorXd& x) { return 0.5 * (x.squaredNorm() - 1.0); };
  d.grad_phi = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(x); };
  d.psi = [](const Eigen::VectorXd& x) { return x[0]; };
  d.grad_psi = [](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Unit(2, 0).eval();
  };
  d.bbox_lo = Eigen::VectorXd::Constant(2, -2.5);
  d.bbox_hi = Eigen::VectorXd::Constant(2, 2.5);
  d.diameter = 2.0;  // of the obstacle; the domain itself is unbounded
  return d;
}

DomainSpec DomainSpec::annulus(double r_inner) {
  DomainSpec d;
  d.dim = 2;
  d.catalog_id = "annulus";
  d.phi = [r_inner](const Eigen::VectorXd& x) {
    const double r2 = x.squaredNorm();
    return std::min(0.5 * (1.0 - r2), (r2 - r_inner * r_inner) / (2.0 * r_inner));
  };
  d.grad_phi = [r_inner](const Eigen::VectorXd& x) {
    const double r2 = x.squaredNorm();
    if (0.5 * (1.0 - r2) <= (r2 - r_inner * r_inner) / (2.0 * r_inner))
      return Eigen::VectorXd(-x);
    return Eigen::VectorXd(x / r_inner);
  };
  d.psi = [](const Eigen::VectorXd& x) { return x[0]; };
  d.grad_psi = [](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Unit(2, 0).eval();
  };
  d.bbox_lo = Eigen::VectorXd::Constant(2, -1.0);
  d.bbox_hi = Eigen::VectorXd::Constant(2, 1.0);
  d.diameter = 2.0;
  d.inner_radius = r_inner;
  return d;
}

DomainSpec DomainSpec::ball() {
  DomainSpec d;
  d.dim = 3;
  d.catalog_id = "ball";
  d.phi = [](const Eigen::VectorXd& x) { return 0.5 * (1.0 - x.squaredNorm()); };
  d.grad_phi = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  d.psi = [](const Eigen::VectorXd& x) { return x[2]; };
  d.grad_psi = [](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Unit(3, 2).eval();
  };
  d.bbox_lo = Eigen::VectorXd::Constant(3, -1.0);
  d.bbox_hi = Eigen::VectorXd::Constant(3, 1.0);
  d.diameter = 2.0;
  return d;
}

Eigen::VectorXd DomainSpec::gradient_phi(const Eigen::VectorXd& x) const {
  if (grad_phi) return grad_phi(x);
  return fd_gradient(phi, x);
}

Eigen::VectorXd DomainSpec::gradient_psi(const Eigen::VectorXd& x) const {
  if (grad_psi) return grad_psi(x);
  return fd_gradient(psi, x);
}

Eigen::VectorXd DomainSpec::project_to_boundary(Eigen::VectorXd x) const {
  for (int it = 0; it < 50; ++it) {
    const double v = phi(x);
    if (std::abs(v) <= 1e-13 * (1.0 + x.norm())) return x;
    const Eigen::VectorXd g = gradient_phi(x);
    const double n2 = g.squaredNorm();
    if (n2 < kGradFloor * kGradFloor)
      throw DegenerateNormal("project_to_boundary: vanishing gradient");
    x -= (v / n2) * g;
  }
  throw NotOnBoundary("project_to_boundary: Newton did not converge");
}

bool DomainSpec::near_corner(const Eigen::VectorXd& x) const {
  for (const auto& c : corners)
    if ((x - c).norm() < corner_radius) return true;
  return false;
}

const char* region_name(Region r) {
  switch (r) {
    case Region::Interior: return "Interior";
    case Region::DirichletBoundary: return "DirichletBoundary";
    case Region::NeumannBoundary: return "NeumannBoundary";
    case Region::InterfaceGamma: return "InterfaceGamma";
    case Region::Exterior: return "Exterior";
  }
  return "?";
}

Region classify_region(const DomainSpec& dom, const Eigen::VectorXd& x) {
  const double v = dom.phi(x);
  if (v < -dom.tol_band) return Region::Exterior;
  if (v > dom.tol_band) return Region::Interior;
  const double w = dom.psi(x);
  if (std::abs(w) <= dom.tol_band) return Region::InterfaceGamma;
  return w < 0.0 ? Region::DirichletBoundary : Region::NeumannBoundary;
}

// ---------------------------------------------------------------------------
// Charts

Eigen::MatrixXd Chart::jacobian(const Eigen::VectorXd& y) const {
  const double h = 1e-5 * (1.0 + y.norm());
  Eigen::MatrixXd j(dim_, dim_);
  Eigen::VectorXd yp = y;
  for (int i = 0; i < dim_; ++i) {
    const double yi = y[i];
    yp[i] = yi + 2 * h;
    const Eigen::VectorXd f2p = to_ambient(yp);
    yp[i] = yi + h;
    const Eigen::VectorXd f1p = to_ambient(yp);
    yp[i] = yi - h;
    const Eigen::VectorXd f1m = to_ambient(yp);
    yp[i] = yi - 2 * h;
    const Eigen::VectorXd f2m = to_ambient(yp);
    yp[i] = yi;
    j.col(i) = (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * h);
  }
  return j;
}

Eigen::VectorXd Chart::covector_to_chart(const Eigen::VectorXd& y,
                                         const Eigen::VectorXd& xi) const {
  return jacobian(y).transpose() * xi;
}

Eigen::VectorXd Chart::covector_to_ambient(const Eigen::VectorXd& y,
                                           const Eigen::VectorXd& eta) const {
  return jacobian(y).transpose().partialPivLu().solve(eta);
}

namespace {

double wrap_angle(double t) {
  while (t > M_PI) t -= 2.0 * M_PI;
  while (t <= -M_PI) t += 2.0 * M_PI;
  return t;
}

class HalfspaceChart final : public Chart {
 public:
  HalfspaceChart(int dim, Eigen::VectorXd base) : Chart(dim, std::move(base)) {}

  Eigen::VectorXd to_ambient(const Eigen::VectorXd& y) const override {
    Eigen::VectorXd x = base_;
    for (int i = 0; i + 1 < dim_; ++i) x[i] += y[i];
    x[dim_ - 1] = y[dim_ - 1];
    return x;
  }
  Eigen::VectorXd from_ambient(const Eigen::VectorXd& x) const override {
    Eigen::VectorXd y(dim_);
    for (int i = 0; i + 1 < dim_; ++i) y[i] = x[i] - base_[i];
    y[dim_ - 1] = x[dim_ - 1];
    return y;
  }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Identity(dim_, dim_);
  }
};

class IntervalChart final : public Chart {
 public:
  IntervalChart(Eigen::VectorXd base, bool left)
      : Chart(1, std::move(base)), left_(left) {}

  Eigen::VectorXd to_ambient(const Eigen::VectorXd& y) const override {
    Eigen::VectorXd x(1);
    x[0] = left_ ? y[0] : 1.0 - y[0];
    return x;
  }
  Eigen::VectorXd from_ambient(const Eigen::VectorXd& x) const override {
    Eigen::VectorXd y(1);
    y[0] = left_ ? x[0] : 1.0 - x[0];
    return y;
  }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Constant(1, 1, left_ ? 1.0 : -1.0);
  }

 private:
  bool left_;
};

// Shared by the disc, its exterior, and both annulus boundary circles:
// tangential coordinate is the polar angle offset, normal coordinate is the
// signed radial depth. orient = -1 when the domain lies at r < r_b (inward
// means decreasing r), +1 when it lies at r > r_b.
class CircleChart final : public Chart {
 public:
  CircleChart(Eigen::VectorXd base, double r_b, int orient)
      : Chart(2, std::move(base)),
        r_b_(r_b),
        orient_(orient),
        t0_(std::atan2(base_[1], base_[0])) {}

  Eigen::VectorXd to_ambient(const Eigen::VectorXd& y) const override {
    const double r = r_b_ + orient_ * y[1];
    const double t = t0_ + y[0];
    return (Eigen::VectorXd(2) << r * std::cos(t), r * std::sin(t)).finished();
  }
  Eigen::VectorXd from_ambient(const Eigen::VectorXd& x) const override {
    const double r = x.norm();
    const double t = std::atan2(x[1], x[0]);
    return (Eigen::VectorXd(2) << wrap_angle(t - t0_), orient_ * (r - r_b_))
        .finished();
  }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& y) const override {
    const double r = r_b_ + orient_ * y[1];
    const double t = t0_ + y[0];
    Eigen::MatrixXd j(2, 2);
    j.col(0) = (Eigen::VectorXd(2) << -r * std::sin(t), r * std::cos(t)).finished();
    j.col(1) =
        (Eigen::VectorXd(2) << orient_ * std::cos(t), orient_ * std::sin(t))
            .finished();
    return j;
  }

 private:
  double r_b_;
  int orient_;
  double t0_;
};

class RectangleChart final : public Chart {
 public:
  // edge: 0 x=0, 1 x=ax, 2 y=0, 3 y=ay.
  RectangleChart(Eigen::VectorXd base, double ax, double ay, int edge)
      : Chart(2, std::move(base)), ax_(ax), ay_(ay), edge_(edge) {}

  Eigen::VectorXd to_ambient(const Eigen::VectorXd& y) const override {
    Eigen::VectorXd x(2);
    switch (edge_) {
      case 0: x << y[1], base_[1] + y[0]; break;
      case 1: x << ax_ - y[1], base_[1] + y[0]; break;
      case 2: x << base_[0] + y[0], y[1]; break;
      default: x << base_[0] + y[0], ay_ - y[1]; break;
    }
    return x;
  }
  Eigen::VectorXd from_ambient(const Eigen::VectorXd& x) const override {
    Eigen::VectorXd y(2);
    switch (edge_) {
      case 0: y << x[1] - base_[1], x[0]; break;
      case 1: y << x[1] - base_[1], ax_ - x[0]; break;
      case 2: y << x[0] - base_[0], x[1]; break;
      default: y << x[0] - base_[0], ay_ - x[1]; break;
    }
    return y;
  }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd&) const override {
    Eigen::MatrixXd j(2, 2);
    switch (edge_) {
      case 0: j << 0, 1, 1, 0; break;
      case 1: j << 0, -1, 1, 0; break;
      case 2: j << 1, 0, 0, 1; break;
      default: j << 1, 0, 0, -1; break;
    }
    return j;
  }

 private:
  double ax_, ay_;
  int edge_;
};

// Geodesic normal coordinates on the unit sphere around the base point,
// radially extended: y' is the tangent-plane exponential coordinate pair,
// y_d the inward radial depth.
class BallChart final : public Chart {
 public:
  explicit BallChart(Eigen::VectorXd base) : Chart(3, std::move(base)) {
    // Orthonormal frame (t1, t2, base).
    Eigen::Vector3d b = base_;
    Eigen::Vector3d seed = std::abs(b[0]) < 0.9 ? Eigen::Vector3d::UnitX()
                                                : Eigen::Vector3d::UnitY();
    t1_ = (seed - seed.dot(b) * b).normalized();
    t2_ = b.cross(t1_);
  }

  Eigen::VectorXd to_ambient(const Eigen::VectorXd& y) const override {
    const Eigen::Vector3d b = base_;
    const Eigen::Vector3d v = y[0] * t1_ + y[1] * t2_;
    const double rho = v.norm();
    const Eigen::Vector3d u = std::cos(rho) * b + sinc(rho) * v;
    return (1.0 - y[2]) * u;
  }
  Eigen::VectorXd from_ambient(const Eigen::VectorXd& x) const override {
    const double r = x.norm();
    const Eigen::Vector3d u = x / r;
    const Eigen::Vector3d b = base_;
    const double c = std::clamp(u.dot(b), -1.0, 1.0);
    const Eigen::Vector3d w = u - c * b;
    const double sw = w.norm();
    const double rho = std::atan2(sw, c);
    Eigen::VectorXd y(3);
    if (sw < 1e-300) {
      y << 0.0, 0.0, 1.0 - r;
      return y;
    }
    const Eigen::Vector3d dir = w / sw;
    y << rho * dir.dot(t1_), rho * dir.dot(t2_), 1.0 - r;
    return y;
  }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& y) const override {
    const Eigen::Vector3d b = base_;
    const Eigen::Vector3d v = y[0] * t1_ + y[1] * t2_;
    const double rho = v.norm();
    const Eigen::Vector3d u = std::cos(rho) * b + sinc(rho) * v;
    const double s = sinc(rho);
    const double k = sinc_slope(rho);
    Eigen::MatrixXd j(3, 3);
    const Eigen::Vector3d t[2] = {t1_, t2_};
    for (int i = 0; i < 2; ++i) {
      const Eigen::Vector3d du = -s * y[i] * b + k * y[i] * v + s * t[i];
      j.col(i) = (1.0 - y[2]) * du;
    }
    j.col(2) = -u;
    return j;
  }

 private:
  static double sinc(double r) {
    if (r < 1e-4) return 1.0 - r * r / 6.0;
    return std::sin(r) / r;
  }
  // (r cos r - sin r) / r^3 = sinc'(r)/r, regular at 0.
  static double sinc_slope(double r) {
    if (r < 1e-4) return -1.0 / 3.0 + r * r / 30.0;
    return (r * std::cos(r) - std::sin(r)) / (r * r * r);
  }

  Eigen::Vector3d t1_, t2_;
};

// Numerical chart for planar level-set domains and arbitrary metrics: walk
// the boundary by (Euclidean) arc length from the base point, then shoot a
// unit-speed metric geodesic inward. The inward leg is what makes the
// pulled-back symbol split; the boundary parameterization only relabels y'.
class PlanarGeodesicChart final : public Chart {
 public:
  PlanarGeodesicChart(DomainSpec dom, MetricField metric, Eigen::VectorXd base)
      : Chart(2, std::move(base)), dom_(std::move(dom)), metric_(std::move(metric)) {
    opts_.rtol = 1e-12;
    opts_.atol = 1e-12;
    opts_.h_max = 0.05;
  }

  Eigen::VectorXd to_ambient(const Eigen::VectorXd& y) const override {
    Eigen::VectorXd xb = walk_boundary(y[0]);
    if (y[1] == 0.0) return xb;
    return shoot_inward(xb, y[1]);
  }

  Eigen::VectorXd from_ambient(const Eigen::VectorXd& x) const override {
    // Newton on the chart map, started from the normal-depth estimate. Valid
    // in the tube around the base point like every chart here.
    Eigen::VectorXd y(2);
    const Eigen::VectorXd g = dom_.gradient_phi(x);
    y << 0.0, dom_.phi(x) / std::max(g.norm(), kGradFloor);
    for (int it = 0; it < 40; ++it) {
      const Eigen::VectorXd r = to_ambient(y) - x;
      if (r.norm() < 1e-11) return y;
      y -= jacobian(y).partialPivLu().solve(r);
    }
    throw ChartFailure("planar chart: inverse Newton did not converge");
  }

 private:
  Eigen::VectorXd walk_boundary(double arc) const {
    if (arc == 0.0) return base_;
    // Tangent field rotated from grad(phi), plus a restoring term that keeps
    // the walk pinned to {phi = 0}.
    ode::RhsFn rhs = [this](double, const Eigen::VectorXd& x,
                            Eigen::VectorXd& dx) {
      const Eigen::VectorXd g = dom_.gradient_phi(x);
      const double n2 = std::max(g.squaredNorm(), kGradFloor * kGradFloor);
      Eigen::VectorXd t(2);
      t << -g[1], g[0];
      dx = t / std::sqrt(n2) - 10.0 * dom_.phi(x) / n2 * g;
    };
    ode::Dopri5 walker(rhs, opts_);
    walker.start(0.0, base_);
    while (std::abs(walker.s() - arc) > 1e-15) walker.step(arc);
    return dom_.project_to_boundary(walker.y());
  }

  Eigen::VectorXd shoot_inward(const Eigen::VectorXd& xb, double depth) const {
    // Unit-speed geodesic of the metric dual to the principal part: with
    // x' = P xi and xi' = -grad_x (xi^T P xi)/2, the speed xi^T P xi is
    // conserved, so normalizing the initial conormal gives arc length.
    const Eigen::VectorXd g = dom_.gradient_phi(xb);
    const Eigen::MatrixXd p0 = metric_.principal(xb);
    const Eigen::VectorXd xi0 = g / std::sqrt(g.dot(p0 * g));
    ode::RhsFn rhs = [this](double, const Eigen::VectorXd& st,
                            Eigen::VectorXd& dst) {
      const Eigen::VectorXd x = st.head(2);
      const Eigen::VectorXd xi = st.tail(2);
      dst.resize(4);
      dst.head(2) = metric_.principal(x) * xi;
      const auto quad = [this, &xi](const Eigen::VectorXd& pos) {
        return 0.5 * xi.dot(metric_.principal(pos) * xi);
      };
      dst.tail(2) = metric_.flat ? Eigen::VectorXd::Zero(2).eval()
                                 : Eigen::VectorXd(-fd_gradient(quad, x));
    };
    Eigen::VectorXd st(4);
    st << xb, xi0;
    ode::Dopri5 shooter(rhs, opts_);
    shooter.start(0.0, st);
    while (std::abs(shooter.s() - depth) > 1e-15) shooter.step(depth);
    return shooter.y().head(2);
  }

  DomainSpec dom_;
  MetricField metric_;
  ode::Options opts_;
};

// One-dimensional analogue: y_d is metric arc length from the boundary point.
class Line1DChart final : public Chart {
 public:
  Line1DChart(DomainSpec dom, MetricField metric, Eigen::VectorXd base)
      : Chart(1, std::move(base)), dom_(std::move(dom)), metric_(std::move(metric)) {
    sign_ = dom_.gradient_phi(base_)[0] > 0 ? 1.0 : -1.0;
  }

  Eigen::VectorXd to_ambient(const Eigen::VectorXd& y) const override {
    if (y[0] == 0.0) return base_;
    ode::RhsFn rhs = [this](double, const Eigen::VectorXd& x,
                            Eigen::VectorXd& dx) {
      dx.resize(1);
      dx[0] = sign_ * std::sqrt(metric_.principal(x)(0, 0));
    };
    ode::Options opts;
    ode::Dopri5 shooter(rhs, opts);
    shooter.start(0.0, base_);
    while (std::abs(shooter.s() - y[0]) > 1e-15) shooter.step(y[0]);
    return shooter.y();
  }
  Eigen::VectorXd from_ambient(const Eigen::VectorXd& x) const override {
    Eigen::VectorXd y(1);
    y[0] = sign_ * (x[0] - base_[0]) / std::sqrt(metric_.principal(x)(0, 0));
    for (int it = 0; it < 40; ++it) {
      const double r = to_ambient(y)[0] - x[0];
      if (std::abs(r) < 1e-12) return y;
      y[0] -= r / jacobian(y)(0, 0);
    }
    throw ChartFailure("line chart: inverse Newton did not converge");
  }

 private:
  DomainSpec dom_;
  MetricField metric_;
  double sign_;
};

}  // namespace

std::unique_ptr<Chart> normal_chart(const DomainSpec& dom,
                                    const MetricField& metric,
                                    const Eigen::VectorXd& b) {
  if (std::abs(dom.phi(b)) > std::max(dom.tol_band, 1e-9))
    throw NotOnBoundary("normal_chart: phi(base) = " +
                        std::to_string(dom.phi(b)));
  if (dom.gradient_phi(b).norm() < kGradFloor)
    throw DegenerateNormal("normal_chart: vanishing boundary gradient");
  if (dom.near_corner(b))
    throw CornerBall("normal_chart: base point inside a corner ball");

  if (metric.flat && !dom.catalog_id.empty()) {
    const std::string& id = dom.catalog_id;
    if (id == "halfspace") return std::make_unique<HalfspaceChart>(dom.dim, b);
    if (id == "interval")
      return std::make_unique<IntervalChart>(b, b[0] < 0.5);
    if (id == "disc") return std::make_unique<CircleChart>(b, 1.0, -1);
    if (id == "disc-exterior") return std::make_unique<CircleChart>(b, 1.0, +1);
    if (id == "annulus") {
      const bool outer = b.norm() > 0.5 * (1.0 + dom.inner_radius);
      return outer ? std::make_unique<CircleChart>(b, 1.0, -1)
                   : std::make_unique<CircleChart>(b, dom.inner_radius, +1);
    }
    if (id == "rectangle") {
      const double ax = dom.bbox_hi[0], ay = dom.bbox_hi[1];
      const double c[4] = {b[0], ax - b[0], b[1], ay - b[1]};
      int edge = 0;
      for (int i = 1; i < 4; ++i)
        if (c[i] < c[edge]) edge = i;
      return std::make_unique<RectangleChart>(b, ax, ay, edge);
    }
    if (id == "ball") return std::make_unique<BallChart>(b);
  }

  if (dom.dim == 1)
    return std::make_unique<Line1DChart>(dom, metric, b);
  if (dom.dim == 2)
    return std::make_unique<PlanarGeodesicChart>(dom, metric, b);
  throw UnsupportedDomain(
      "normal_chart: no numerical chart for generic domains in dimension " +
      std::to_string(dom.dim));
}

}  // namespace zr::geom
