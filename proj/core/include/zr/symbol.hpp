// Principal symbol evaluation, boundary phase-space operations, and the
// classification of boundary points (hyperbolic / elliptic / glancing with
// contact order). Everything works in ambient coordinates through the
// cometric pairing B(xi, eta) = xi^T P(x) eta; charts are only needed for
// the reduced-form views.
#pragma once

#include <Eigen/Dense>
#include <limits>

#include "zr/geometry.hpp"

namespace zr::sym {

// A point of the boundary phase space T_b* = T*Omega ∪ T*∂Omega. All three
// kinds store ambient coordinates: Boundary covectors are tangential (the
// cometric pairing with d(phi) vanishes), Interface covectors additionally
// pair to zero with d(psi).
struct PhasePoint {
  enum class Kind { Interior, Boundary, Interface };
  Kind kind = Kind::Interior;
  Eigen::VectorXd x;
  Eigen::VectorXd xi;
};

PhasePoint make_interior(Eigen::VectorXd x, Eigen::VectorXd xi);
// Projects xi onto the tangential hyperplane at a boundary point.
PhasePoint make_boundary(const geom::DomainSpec& dom,
                         const geom::MetricField& metric, Eigen::VectorXd x,
                         const Eigen::VectorXd& xi);
// Projects xi B-orthogonally to both d(phi) and d(psi) at an interface point.
PhasePoint make_interface(const geom::DomainSpec& dom,
                          const geom::MetricField& metric, Eigen::VectorXd x,
                          const Eigen::VectorXd& xi);

// Principal symbol p(x, xi) = xi^T P(x) xi - 1.
double symbol_p(const geom::MetricField& metric, const Eigen::VectorXd& x,
                const Eigen::VectorXd& xi);

// (dx/ds, dxi/ds) = (2 P xi, -grad_x xi^T P xi). The positional gradient is
// closed-form zero for flat metrics and 4th-order finite differences else.
void hamiltonian_field(const geom::MetricField& metric, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& xi, Eigen::VectorXd& dx,
                       Eigen::VectorXd& dxi);

// Cometric pairing of two covectors at x.
double pairing(const geom::MetricField& metric, const Eigen::VectorXd& x,
               const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Tangential part of a covector at a boundary point: the B-orthogonal
// complement of the boundary conormal.
Eigen::VectorXd tangential_part(const geom::DomainSpec& dom,
                                const geom::MetricField& metric,
                                const Eigen::VectorXd& x,
                                const Eigen::VectorXd& xi);

// Specular reflection: flips the conormal component, preserves the symbol
// and the tangential data exactly.
Eigen::VectorXd reflect(const geom::DomainSpec& dom,
                        const geom::MetricField& metric,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& xi);

// Rate of change of phi along the interior flow: 2 B(xi, d phi). Positive
// means the trajectory is moving inward.
double conormal_speed(const geom::DomainSpec& dom,
                      const geom::MetricField& metric, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& xi);

// Characteristic covector over a tangential one at a hyperbolic boundary
// point: xi_tan + s * sqrt(-r) * normalized conormal, s = +1 inward.
Eigen::VectorXd hyperbolic_lift(const geom::DomainSpec& dom,
                                const geom::MetricField& metric,
                                const Eigen::VectorXd& x,
                                const Eigen::VectorXd& xi_tan, int direction);

// Scales xi onto the characteristic set {p = 0}.
Eigen::VectorXd characteristic_rescale(const geom::MetricField& metric,
                                       const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& xi);

// Tangential symbol data at a boundary point, chart-free:
//   r_value = p(x, xi_tan)            (= R - 1 in any adapted chart)
//   dxd_r   = normal derivative of R, via the double bracket of p with phi.
struct BoundaryData {
  double r_value;
  double dxd_r;
};
BoundaryData boundary_data(const geom::DomainSpec& dom,
                           const geom::MetricField& metric,
                           const Eigen::VectorXd& x,
                           const Eigen::VectorXd& xi_tan);

// Chart view of the same quantities at depth x_d, for catalog cross-checks:
// R(y', x_d, eta') = pullback(p)(y, (eta', 0)) + 1, derivative by finite
// differences in the normal coordinate.
struct ReducedSymbol {
  double r;
  double dxd_r;
};
ReducedSymbol reduced_symbol(const geom::Chart& chart,
                             const geom::MetricField& metric,
                             const Eigen::VectorXd& y_tan, double x_d,
                             const Eigen::VectorXd& eta_tan);

// Hamiltonian field of the pulled-back symbol in chart coordinates, by
// finite differences; test instrumentation for the closed-form catalog.
void chart_hamiltonian(const geom::Chart& chart, const geom::MetricField& metric,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                       Eigen::VectorXd& dy, Eigen::VectorXd& deta);

enum class BoundaryTag {
  Hyperbolic,
  Elliptic,
  Diffractive,
  Gliding,
  HigherGlancing,
  Undetermined,
};

const char* tag_name(BoundaryTag t);

struct BoundaryClassification {
  BoundaryTag tag = BoundaryTag::Undetermined;
  double r_value = 0.0;
  double dxd_r = 0.0;
  // Contact-order fit (populated when the probe ran): boundary distance
  // behaves like alpha * sigma^k in the arc-length parameter sigma.
  int contact_order = 0;
  int alpha_sign = 0;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double alpha_err = std::numeric_limits<double>::quiet_NaN();
  double slope_defect = std::numeric_limits<double>::quiet_NaN();
};

struct ClassifyOptions {
  double eps_glance = 1e-7;  // use 1e-4 for generic (non-catalog) domains
  double s_probe = 1e-2;
  int k_max = 6;
  double noise_floor = 1e-13;
  enum class Probe { Auto, Always, Never } probe = Probe::Auto;
};

// Hyperbolic/elliptic by the sign of r_value; glancing split by the sign of
// dxd_r; deep-glancing points (both below eps_glance) get a bidirectional
// integration of the free flow and a log-log fit of the boundary-distance
// exponent. Undetermined is a valid outcome (flat contact, noise floor, or
// k beyond k_max).
BoundaryClassification classify_boundary(const geom::DomainSpec& dom,
                                         const geom::MetricField& metric,
                                         const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& xi_tan,
                                         const ClassifyOptions& opts = {});

// Gliding Hamiltonian field in ambient coordinates: H_p corrected along the
// boundary Hamiltonian so that both phi and the conormal speed are invariant.
// Defined on (a neighborhood of) the gliding set.
void glide_field(const geom::DomainSpec& dom, const geom::MetricField& metric,
                 const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                 Eigen::VectorXd& dx, Eigen::VectorXd& dxi);

// Interface Hamiltonian field on the doubly-tangential set over Gamma;
// identically zero in dimension 2 where that set has no tangent directions.
void interface_field(const geom::DomainSpec& dom,
                     const geom::MetricField& metric, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& xi, Eigen::VectorXd& dx,
                     Eigen::VectorXd& dxi);

}  // namespace zr::sym
