// Domains as level sets, the Dirichlet/Neumann boundary partition, metric and
// damping coefficient fields, and boundary-adapted (normal geodesic) charts.
// Everything here is immutable after construction and safe to share across
// threads.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "zr/errors.hpp"

namespace zr::geom {

// C-infinity monotone step: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t);

// Coefficients of the second-order operator: a symmetric positive-definite
// principal part, optional real first-order part, optional zeroth-order part.
struct MetricField {
  int dim = 2;
  // Constant identity principal part; enables closed-form catalog charts.
  bool flat = true;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> principal;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> first_order;  // may be null
  std::function<double(const Eigen::VectorXd&)> zeroth_order;         // may be null

  static MetricField euclidean(int dim);
  static MetricField constant_diagonal(const Eigen::VectorXd& coeffs);

  Eigen::MatrixXd principal_at(const Eigen::VectorXd& x) const;
  // Throws Error if the principal part is asymmetric (> 1e-12) or not
  // positive definite at x.
  void validate_at(const Eigen::VectorXd& x) const;
};

// A domain Omega = {phi > 0} with boundary partition psi: by convention the
// Dirichlet part is {phi = 0, psi < 0}, the Neumann part {phi = 0, psi > 0},
// and the interface is {phi = 0, psi = 0}.
struct DomainSpec {
  int dim = 2;
  std::string catalog_id;  // empty for generic level-set domains
  std::function<double(const Eigen::VectorXd&)> phi;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_phi;  // may be null
  std::function<double(const Eigen::VectorXd&)> psi;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_psi;  // may be null

  // Band half-width for "on the boundary / on the interface" decisions.
  double tol_band = 1e-9;
  // Points within this distance of a listed corner are rejected by charts
  // and trajectory code; the smooth theory does not cover them.
  double corner_radius = 1e-3;
  std::vector<Eigen::VectorXd> corners;

  Eigen::VectorXd bbox_lo, bbox_hi;
  double diameter = 0.0;
  double inner_radius = 0.0;  // annulus only

  static DomainSpec interval();                 // [0,1], Dirichlet 0 / Neumann 1
  static DomainSpec halfspace(int dim);         // {x_d > 0}
  static DomainSpec rectangle(double ax, double ay);
  static DomainSpec disc();                     // unit disc
  static DomainSpec disc_exterior();            // {r > 1}
  static DomainSpec annulus(double r_inner);    // {r_inner < r < 1}
  static DomainSpec ball();                     // unit 3-ball, equatorial interface

  // Closed-form gradients when provided, else 4th-order central differences.
  Eigen::VectorXd gradient_phi(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient_psi(const Eigen::VectorXd& x) const;
  // Newton projection onto {phi = 0}; throws DegenerateNormal if the
  // gradient collapses, NotOnBoundary if it does not converge.
  Eigen::VectorXd project_to_boundary(Eigen::VectorXd x) const;
  bool near_corner(const Eigen::VectorXd& x) const;
};

enum class Region {
  Interior,
  DirichletBoundary,
  NeumannBoundary,
  InterfaceGamma,
  Exterior,
};

const char* region_name(Region r);

Region classify_region(const DomainSpec& dom, const Eigen::VectorXd& x);

// Boundary-adapted coordinates y = (y', y_d): the domain is locally
// {y_d > 0}, the boundary is {y_d = 0}, and the pulled-back principal symbol
// splits as eta_d^2 + R(y, eta') - 1 (no cross terms, unit normal
// coefficient). Covectors transform by eta = J^T xi with J = dx/dy.
class Chart {
 public:
  virtual ~Chart() = default;

  int dim() const { return dim_; }
  const Eigen::VectorXd& base() const { return base_; }

  virtual Eigen::VectorXd to_ambient(const Eigen::VectorXd& y) const = 0;
  virtual Eigen::VectorXd from_ambient(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd jacobian(const Eigen::VectorXd& y) const;

  Eigen::VectorXd covector_to_chart(const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& xi) const;
  Eigen::VectorXd covector_to_ambient(const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& eta) const;

 protected:
  Chart(int dim, Eigen::VectorXd base) : dim_(dim), base_(std::move(base)) {}

  int dim_;
  Eigen::VectorXd base_;
};

// Builds the boundary-adapted chart centered at a boundary point. Catalog
// domains with the flat metric get closed-form charts; otherwise a numerical
// chart is constructed by shooting metric geodesics inward from an
// arc-length boundary walk (planar domains only).
std::unique_ptr<Chart> normal_chart(const DomainSpec& dom,
                                    const MetricField& metric,
                                    const Eigen::VectorXd& boundary_point);

}  // namespace zr::geom
