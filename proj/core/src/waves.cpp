#include "zr/waves.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "zr/errors.hpp"

namespace zr::waves {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<cplx>;
using Trip = Eigen::Triplet<double>;

// A boundary node is clamped unless the partition function is strictly
// positive there; an exact interface hit lands on the Dirichlet side.
constexpr double kBcTol = 1e-12;
constexpr double kCoeffTol = 1e-14;

VectorXd diagonal_metric_at(const geom::MetricField& metric,
                            const VectorXd& x) {
  const MatrixXd p = metric.principal_at(x);
  for (int i = 0; i < p.rows(); ++i)
    for (int j = 0; j < p.cols(); ++j)
      if (i != j && std::abs(p(i, j)) > kCoeffTol)
        throw UnsupportedOperator(
            "assemble: cross-derivative principal terms do not fit the "
            "axis-aligned stencil");
  return p.diagonal();
}

// A formally self-adjoint first-order term is imaginary; it has no place in
// a real stiffness matrix, so anything but zero is rejected.
void require_zero_first_order(const geom::MetricField& metric,
                              const std::vector<VectorXd>& probes) {
  if (!metric.first_order) return;
  for (const auto& x : probes)
    if (metric.first_order(x).cwiseAbs().maxCoeff() > kCoeffTol)
      throw UnsupportedOperator(
          "assemble: nonzero first-order coefficients need a complex-valued "
          "discretization");
}

double zeroth_at(const geom::MetricField& metric, const VectorXd& x) {
  return metric.zeroth_order ? metric.zeroth_order(x) : 0.0;
}

DiscreteOperator assemble_line(const geom::DomainSpec& dom,
                               const geom::MetricField& metric,
                               const DampingField& damping, int n) {
  const double lo = dom.bbox_lo[0];
  const double dx = (dom.bbox_hi[0] - lo) / n;
  auto node_x = [&](int i) {
    VectorXd x(1);
    x[0] = lo + i * dx;
    return x;
  };
  require_zero_first_order(metric, {node_x(0), node_x(n / 2), node_x(n)});

  std::vector<int> dof_of_node(n + 1, -1);
  std::vector<NodeRole> roles;
  int nd = 0;
  for (int i = 0; i <= n; ++i) {
    const bool bdry = (i == 0 || i == n);
    if (bdry && dom.psi(node_x(i)) <= kBcTol) continue;
    dof_of_node[i] = nd++;
    roles.push_back(bdry ? NodeRole::NeumannBoundary : NodeRole::Interior);
  }

  DiscreteOperator op;
  op.mass.resize(nd);
  op.damping_diag.resize(nd);
  op.mesh.kind = "line";
  op.mesh.cells = {n};
  op.mesh.spacing = {dx};
  op.mesh.nodes.resize(nd, 1);
  op.mesh.dof_of_node = dof_of_node;
  op.mesh.node_of_dof.resize(nd);
  op.dof_map = std::move(roles);

  std::vector<Trip> trips;
  trips.reserve(4 * n);
  for (int i = 0; i <= n; ++i) {
    const int d = dof_of_node[i];
    if (d < 0) continue;
    const VectorXd x = node_x(i);
    op.mass[d] = (i == 0 || i == n) ? 0.5 * dx : dx;
    op.damping_diag[d] = damping(x);
    op.mesh.nodes(d, 0) = x[0];
    op.mesh.node_of_dof[d] = i;
    const double p0 = zeroth_at(metric, x);
    if (p0 != 0.0) trips.emplace_back(d, d, p0 * op.mass[d]);
  }
  for (int f = 0; f < n; ++f) {
    VectorXd mid(1);
    mid[0] = lo + (f + 0.5) * dx;
    const double coef = diagonal_metric_at(metric, mid)[0] / dx;
    const int a = dof_of_node[f];
    const int b = dof_of_node[f + 1];
    if (a >= 0) trips.emplace_back(a, a, coef);
    if (b >= 0) trips.emplace_back(b, b, coef);
    if (a >= 0 && b >= 0) {
      trips.emplace_back(a, b, -coef);
      trips.emplace_back(b, a, -coef);
    }
  }
  op.stiffness.resize(nd, nd);
  op.stiffness.setFromTriplets(trips.begin(), trips.end());
  op.stiffness.makeCompressed();
  return op;
}

DiscreteOperator assemble_tensor(const geom::DomainSpec& dom,
                                 const geom::MetricField& metric,
                                 const DampingField& damping, int res) {
  const double ax = dom.bbox_hi[0];
  const double ay = dom.bbox_hi[1];
  const int nx = res;
  const int ny = res;
  const double dx = ax / nx;
  const double dy = ay / ny;
  auto node_x = [&](int i, int j) {
    VectorXd x(2);
    x << i * dx, j * dy;
    return x;
  };
  auto node_id = [&](int i, int j) { return j * (nx + 1) + i; };
  require_zero_first_order(
      metric, {node_x(0, 0), node_x(nx / 2, ny / 2), node_x(nx, ny)});

  std::vector<int> dof_of_node((nx + 1) * (ny + 1), -1);
  std::vector<NodeRole> roles;
  int nd = 0;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const bool bdry = (i == 0 || i == nx || j == 0 || j == ny);
      if (bdry && dom.psi(node_x(i, j)) <= kBcTol) continue;
      dof_of_node[node_id(i, j)] = nd++;
      roles.push_back(bdry ? NodeRole::NeumannBoundary : NodeRole::Interior);
    }

  DiscreteOperator op;
  op.mass.resize(nd);
  op.damping_diag.resize(nd);
  op.mesh.kind = "tensor";
  op.mesh.cells = {nx, ny};
  op.mesh.spacing = {dx, dy};
  op.mesh.nodes.resize(nd, 2);
  op.mesh.dof_of_node = dof_of_node;
  op.mesh.node_of_dof.resize(nd);
  op.dof_map = std::move(roles);

  auto wx = [&](int i) { return (i == 0 || i == nx) ? 0.5 * dx : dx; };
  auto wy = [&](int j) { return (j == 0 || j == ny) ? 0.5 * dy : dy; };

  std::vector<Trip> trips;
  trips.reserve(8 * nd);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const int d = dof_of_node[node_id(i, j)];
      if (d < 0) continue;
      const VectorXd x = node_x(i, j);
      op.mass[d] = wx(i) * wy(j);
      op.damping_diag[d] = damping(x);
      op.mesh.nodes.row(d) = x.transpose();
      op.mesh.node_of_dof[d] = node_id(i, j);
      const double p0 = zeroth_at(metric, x);
      if (p0 != 0.0) trips.emplace_back(d, d, p0 * op.mass[d]);
    }
  auto add_face = [&](int da, int db, double coef) {
    if (da >= 0) trips.emplace_back(da, da, coef);
    if (db >= 0) trips.emplace_back(db, db, coef);
    if (da >= 0 && db >= 0) {
      trips.emplace_back(da, db, -coef);
      trips.emplace_back(db, da, -coef);
    }
  };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) {
      VectorXd mid(2);
      mid << (i + 0.5) * dx, j * dy;
      const double coef = diagonal_metric_at(metric, mid)[0] * wy(j) / dx;
      add_face(dof_of_node[node_id(i, j)], dof_of_node[node_id(i + 1, j)],
               coef);
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      VectorXd mid(2);
      mid << i * dx, (j + 0.5) * dy;
      const double coef = diagonal_metric_at(metric, mid)[1] * wx(i) / dy;
      add_face(dof_of_node[node_id(i, j)], dof_of_node[node_id(i, j + 1)],
               coef);
    }
  op.stiffness.resize(nd, nd);
  op.stiffness.setFromTriplets(trips.begin(), trips.end());
  op.stiffness.makeCompressed();
  return op;
}

// Cell-centered finite volumes in (r, theta); the wall condition rides on
// each outer/inner face by the sign of psi at the face midpoint. Exactness
// of the total mass (pi R^2 or the annular area) follows from the midpoint
// radii.
DiscreteOperator assemble_polar(const geom::DomainSpec& dom,
                                const geom::MetricField& metric,
                                const DampingField& damping, int res) {
  if (!metric.flat)
    throw UnsupportedOperator("assemble: the polar grid requires the "
                              "Euclidean metric");
  const double r_out = dom.bbox_hi[0];
  const double r_in = dom.catalog_id == "annulus" ? dom.inner_radius : 0.0;
  const int nr = res;
  const int nt = 6 * res;
  const double dr = (r_out - r_in) / nr;
  const double dth = 2.0 * std::numbers::pi / nt;
  auto center = [&](int ir, int jt) {
    const double r = r_in + (ir + 0.5) * dr;
    const double th = (jt + 0.5) * dth;
    VectorXd x(2);
    x << r * std::cos(th), r * std::sin(th);
    return x;
  };
  auto cell_id = [&](int ir, int jt) { return ir * nt + jt; };
  require_zero_first_order(metric,
                           {center(0, 0), center(nr / 2, nt / 3),
                            center(nr - 1, nt / 2)});

  const int nd = nr * nt;
  DiscreteOperator op;
  op.mass.resize(nd);
  op.damping_diag.resize(nd);
  op.dof_map.assign(nd, NodeRole::Interior);
  op.mesh.kind = "polar";
  op.mesh.cells = {nr, nt};
  op.mesh.spacing = {dr, dth};
  op.mesh.nodes.resize(nd, 2);
  op.mesh.dof_of_node.resize(nd);
  op.mesh.node_of_dof.resize(nd);

  std::vector<Trip> trips;
  trips.reserve(8 * nd);
  for (int ir = 0; ir < nr; ++ir)
    for (int jt = 0; jt < nt; ++jt) {
      const int d = cell_id(ir, jt);
      const double rc = r_in + (ir + 0.5) * dr;
      const VectorXd x = center(ir, jt);
      op.mass[d] = rc * dr * dth;
      op.damping_diag[d] = damping(x);
      op.mesh.nodes.row(d) = x.transpose();
      op.mesh.dof_of_node[d] = d;
      op.mesh.node_of_dof[d] = d;
      const double p0 = zeroth_at(metric, x);
      if (p0 != 0.0) trips.emplace_back(d, d, p0 * op.mass[d]);

      // Angular face to the next cell in the ring (periodic).
      const int dn = cell_id(ir, (jt + 1) % nt);
      const double ca = dr / (rc * dth);
      trips.emplace_back(d, d, ca);
      trips.emplace_back(dn, dn, ca);
      trips.emplace_back(d, dn, -ca);
      trips.emplace_back(dn, d, -ca);

      // Radial face outward.
      if (ir + 1 < nr) {
        const int du = cell_id(ir + 1, jt);
        const double rf = r_in + (ir + 1) * dr;
        const double cr = rf * dth / dr;
        trips.emplace_back(d, d, cr);
        trips.emplace_back(du, du, cr);
        trips.emplace_back(d, du, -cr);
        trips.emplace_back(du, d, -cr);
      }
    }
  // Wall faces: clamped walls contribute a half-cell flux; Neumann walls are
  // natural. The inner wall exists only for the annulus (r_in = 0 is the
  // coordinate pole, a zero-area face).
  for (int jt = 0; jt < nt; ++jt) {
    const double th = (jt + 0.5) * dth;
    VectorXd xw(2);
    xw << r_out * std::cos(th), r_out * std::sin(th);
    if (dom.psi(xw) <= kBcTol)
      trips.emplace_back(cell_id(nr - 1, jt), cell_id(nr - 1, jt),
                         2.0 * r_out * dth / dr);
    if (r_in > 0.0) {
      xw << r_in * std::cos(th), r_in * std::sin(th);
      if (dom.psi(xw) <= kBcTol)
        trips.emplace_back(cell_id(0, jt), cell_id(0, jt),
                           2.0 * r_in * dth / dr);
    }
  }
  op.stiffness.resize(nd, nd);
  op.stiffness.setFromTriplets(trips.begin(), trips.end());
  op.stiffness.makeCompressed();
  return op;
}

// The generator pencil for the resolvent: A as a complex sparse block matrix
// and the energy Gram blkdiag(K, M). Throws unless K is positive definite
// (no Dirichlet part leaves a rigid mode and no energy norm).
std::pair<SpMatC, SpMat> build_pencil(const DiscreteOperator& op) {
  const int n = op.dofs();
  Eigen::SimplicialLDLT<SpMat> kchol(op.stiffness);
  if (kchol.info() != Eigen::Success)
    throw UnsupportedOperator(
        "resolvent: the energy inner product needs positive-definite "
        "stiffness (a Dirichlet part)");
  const VectorXd dvec = kchol.vectorD();
  if (dvec.minCoeff() <= 1e-12 * dvec.maxCoeff())
    throw UnsupportedOperator(
        "resolvent: the energy inner product needs positive-definite "
        "stiffness (a Dirichlet part)");

  std::vector<Eigen::Triplet<cplx>> at;
  std::vector<Trip> gt;
  at.reserve(2 * n + op.stiffness.nonZeros());
  gt.reserve(n + op.stiffness.nonZeros());
  for (int i = 0; i < n; ++i) {
    at.emplace_back(i, n + i, cplx(1.0, 0.0));
    if (op.damping_diag[i] != 0.0)
      at.emplace_back(n + i, n + i, cplx(-op.damping_diag[i], 0.0));
    gt.emplace_back(n + i, n + i, op.mass[i]);
  }
  for (int k = 0; k < op.stiffness.outerSize(); ++k)
    for (SpMat::InnerIterator it(op.stiffness, k); it; ++it) {
      at.emplace_back(n + static_cast<int>(it.row()),
                      static_cast<int>(it.col()),
                      cplx(-it.value() / op.mass[it.row()], 0.0));
      gt.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                      it.value());
    }
  SpMatC a(2 * n, 2 * n);
  a.setFromTriplets(at.begin(), at.end());
  a.makeCompressed();
  SpMat gram(2 * n, 2 * n);
  gram.setFromTriplets(gt.begin(), gt.end());
  gram.makeCompressed();
  return {std::move(a), std::move(gram)};
}

}  // namespace

DiscreteOperator assemble(const geom::DomainSpec& dom,
                          const geom::MetricField& metric,
                          const DampingField& damping, int resolution) {
  if (resolution < 4)
    throw ResolutionTooLow("assemble: resolution must be at least 4");
  if (metric.dim != dom.dim)
    throw ConfigError("assemble: metric dimension does not match the domain");
  if (dom.catalog_id == "interval")
    return assemble_line(dom, metric, damping, resolution);
  if (dom.catalog_id == "rectangle")
    return assemble_tensor(dom, metric, damping, resolution);
  if (dom.catalog_id == "disc" || dom.catalog_id == "annulus")
    return assemble_polar(dom, metric, damping, resolution);
  throw UnsupportedDomain("assemble: no structured grid for catalog '" +
                          dom.catalog_id + "'");
}

double energy(const DiscreteOperator& op, const StateVector& U) {
  if (U.u0.size() != op.dofs() || U.u1.size() != op.dofs())
    throw ConfigError("energy: state size does not match the operator");
  return U.u0.dot(op.stiffness * U.u0) +
         U.u1.dot(op.mass.cwiseProduct(U.u1));
}

StateVector ground_state(const DiscreteOperator& op) {
  const int n = op.dofs();
  Eigen::SimplicialLDLT<SpMat> solver(op.stiffness);
  if (solver.info() != Eigen::Success)
    throw LinearSolveFailure("ground_state: stiffness factorization failed");

  VectorXd v = VectorXd::Ones(n);
  v /= std::sqrt(v.dot(op.mass.cwiseProduct(v)));
  for (int it = 0; it < 1000; ++it) {
    VectorXd w = solver.solve(op.mass.cwiseProduct(v));
    w /= std::sqrt(w.dot(op.mass.cwiseProduct(w)));
    const double lambda = w.dot(op.stiffness * w);
    // Converge the vector, not just the Rayleigh quotient (which is
    // quadratically ahead of it).
    const double resid =
        (op.stiffness * w - lambda * op.mass.cwiseProduct(w)).norm();
    v = std::move(w);
    if (resid <= 1e-12 * lambda) break;
  }

  int peak = 0;
  for (int i = 1; i < n; ++i)
    if (std::abs(v[i]) > std::abs(v[peak])) peak = i;
  if (v[peak] < 0.0) v = -v;

  StateVector U;
  U.u0 = std::move(v);
  U.u1 = VectorXd::Zero(n);
  return U;
}

EnergyTrace evolve_wave(const DiscreteOperator& op, const StateVector& U0,
                        double T, double dt) {
  const int n = op.dofs();
  if (U0.u0.size() != n || U0.u1.size() != n)
    throw ConfigError("evolve: state size does not match the operator");
  if (!(dt > 0.0) || !(T > 0.0))
    throw ConfigError("evolve: T and dt must be positive");

  // Midpoint step: solve S v = 2 M u1 - dt K u0 for the midpoint velocity,
  // then u0 += dt v, u1 <- 2 v - u1. The per-step energy change is exactly
  // -2 dt (a v | v) in the discrete quadrature, so the balance residual
  // below measures pure roundoff.
  const VectorXd ma = op.mass.cwiseProduct(op.damping_diag);
  SpMat S = (0.5 * dt * dt) * op.stiffness;
  {
    std::vector<Trip> trips;
    trips.reserve(n);
    for (int i = 0; i < n; ++i)
      trips.emplace_back(i, i, 2.0 * op.mass[i] + dt * ma[i]);
    SpMat d(n, n);
    d.setFromTriplets(trips.begin(), trips.end());
    S += d;
  }
  Eigen::SimplicialLDLT<SpMat> chol(S);
  if (chol.info() != Eigen::Success)
    throw LinearSolveFailure("evolve: implicit step factorization failed");

  const auto nsteps = std::max<long long>(1, std::llround(T / dt));
  EnergyTrace trace;
  trace.samples.reserve(static_cast<size_t>(nsteps) + 1);
  VectorXd u0 = U0.u0;
  VectorXd u1 = U0.u1;
  double e = u0.dot(op.stiffness * u0) + u1.dot(op.mass.cwiseProduct(u1));
  trace.samples.emplace_back(0.0, e);
  for (long long k = 1; k <= nsteps; ++k) {
    const VectorXd rhs =
        2.0 * op.mass.cwiseProduct(u1) - dt * (op.stiffness * u0);
    const VectorXd v = chol.solve(rhs);
    const double dissipated = 2.0 * dt * v.dot(ma.cwiseProduct(v));
    u0 += dt * v;
    u1 = 2.0 * v - u1;
    const double e_next =
        u0.dot(op.stiffness * u0) + u1.dot(op.mass.cwiseProduct(u1));
    trace.max_balance_residual =
        std::max(trace.max_balance_residual, std::abs(e_next - e + dissipated));
    e = e_next;
    trace.samples.emplace_back(k * dt, e);
  }
  return trace;
}

std::pair<double, double> fit_decay(const EnergyTrace& trace) {
  const auto& s = trace.samples;
  if (s.size() < 10)
    throw Error("fit_decay: need at least 10 energy samples");
  for (const auto& [t, e] : s)
    if (!(e > 0.0))
      throw NonPositiveEnergy("fit_decay: energy trace is not positive");
  const double t_tail = 0.5 * s.back().first;
  double n = 0.0, st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  for (const auto& [t, e] : s) {
    if (t < t_tail) continue;
    const double y = std::log(e);
    n += 1.0;
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double det = n * stt - st * st;
  // det = 0 means all tail samples share one t; impossible for a real trace.
  const double slope = det != 0.0 ? (n * sty - st * sy) / det : 0.0;
  const double intercept = (sy - slope * st) / n;
  return {std::exp(intercept), std::max(0.0, -slope)};
}

std::vector<std::complex<double>> spectrum(const DiscreteOperator& op) {
  const int n = op.dofs();
  if (2 * n > 4000)
    throw EigensolverFailure(
        "spectrum: dense eigensolver capped at dimension 4000");
  MatrixXd a = MatrixXd::Zero(2 * n, 2 * n);
  a.block(0, n, n, n).setIdentity();
  a.block(n, 0, n, n) =
      -(op.mass.cwiseInverse().asDiagonal() * MatrixXd(op.stiffness));
  a.block(n, n, n, n) = MatrixXd((-op.damping_diag).asDiagonal());
  Eigen::EigenSolver<MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    throw EigensolverFailure("spectrum: dense eigensolver did not converge");
  std::vector<cplx> eigs(es.eigenvalues().data(),
                         es.eigenvalues().data() + 2 * n);
  std::sort(eigs.begin(), eigs.end(), [](const cplx& a, const cplx& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return eigs;
}

double spectral_abscissa(const std::vector<std::complex<double>>& eigs) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& z : eigs) m = std::max(m, z.real());
  return m;
}

double resolvent_norm(const Eigen::SparseMatrix<std::complex<double>>& a,
                      const Eigen::SparseMatrix<double>& gram, double mu) {
  const int n = static_cast<int>(a.rows());
  SpMatC ident(n, n);
  ident.setIdentity();
  const SpMatC shifted = a - cplx(0.0, mu) * ident;
  Eigen::SparseLU<SpMatC> fwd;
  fwd.compute(shifted);
  if (fwd.info() != Eigen::Success)
    throw SingularShift("resolvent: shift is on the spectrum");
  const SpMatC shifted_adj = shifted.adjoint();
  Eigen::SparseLU<SpMatC> bwd;
  bwd.compute(shifted_adj);
  if (bwd.info() != Eigen::Success)
    throw SingularShift("resolvent: shift is on the spectrum");
  const SpMatC gc = gram.cast<cplx>();
  Eigen::SimplicialLDLT<SpMatC> gchol(gc);
  if (gchol.info() != Eigen::Success ||
      gchol.vectorD().real().minCoeff() <= 0.0)
    throw UnsupportedOperator("resolvent: gram matrix is not positive "
                              "definite");

  auto gdot = [&](const VectorXcd& u, const VectorXcd& v) {
    return cplx(u.adjoint() * (gc * v));
  };
  std::mt19937 rng(0x5eed5u);
  std::normal_distribution<double> gauss;
  VectorXcd z(n);
  for (int i = 0; i < n; ++i) z[i] = cplx(gauss(rng), gauss(rng));
  z /= std::sqrt(std::real(gdot(z, z)));

  // Power iteration on R*R in the gram inner product; each pass costs one
  // forward and one adjoint sparse solve.
  double estimate = 0.0;
  double previous = -1.0;
  for (int it = 0; it < 500; ++it) {
    const VectorXcd w = fwd.solve(z);
    const double lam = std::real(gdot(w, w));
    if (!std::isfinite(lam))
      throw SingularShift("resolvent: solve diverged; shift is on the "
                          "spectrum");
    estimate = std::sqrt(std::max(lam, 0.0));
    if (estimate > 1e12)
      throw SingularShift("resolvent: norm above 1e12; shift is on the "
                          "spectrum");
    const VectorXcd y = bwd.solve(gc * w);
    const VectorXcd t = gchol.solve(y);
    const double tn = std::sqrt(std::real(gdot(t, t)));
    if (!std::isfinite(tn) || !(tn > 0.0))
      throw SingularShift("resolvent: solve diverged; shift is on the "
                          "spectrum");
    z = t / tn;
    if (previous >= 0.0 && std::abs(estimate - previous) <= 1e-4 * estimate)
      break;
    previous = estimate;
  }
  return estimate;
}

double resolvent_norm(const DiscreteOperator& op, double mu) {
  const auto [a, gram] = build_pencil(op);
  return resolvent_norm(a, gram, mu);
}

ResolventScan scan_resolvent(const DiscreteOperator& op, double mu_lo,
                             double mu_hi, double step, int threads) {
  if (!(step > 0.0))
    throw ConfigError("scan: step must be positive");
  ResolventScan scan;
  for (int k = 0;; ++k) {
    const double mu = mu_lo + k * step;
    if (mu > mu_hi + 1e-12) break;
    scan.mu_grid.push_back(mu);
  }
  const auto [a, gram] = build_pencil(op);
  const int total = static_cast<int>(scan.mu_grid.size());
  scan.norms.assign(total, 0.0);

  const int workers = std::clamp(threads, 1, std::max(total, 1));
  if (workers <= 1) {
    for (int i = 0; i < total; ++i)
      scan.norms[i] = resolvent_norm(a, gram, scan.mu_grid[i]);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (int i = next.fetch_add(1); i < total; i = next.fetch_add(1))
            scan.norms[i] = resolvent_norm(a, gram, scan.mu_grid[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  scan.spectral_abscissa = spectral_abscissa(spectrum(op));
  return scan;
}

std::vector<TraceScalingRow> trace_scaling_experiment(
    const DiscreteOperator& op, int n_modes) {
  if (n_modes <= 0)
    throw ConfigError("trace: mode count must be positive");
  if (op.mesh.kind == "polar")
    throw UnsupportedDomain(
        "trace: no boundary trace operator on the polar grid");
  if (op.mesh.kind != "line" && op.mesh.kind != "tensor")
    throw UnsupportedDomain("trace: mesh carries no trace operator");
  if (op.dofs() > 4000)
    throw EigensolverFailure(
        "trace: dense eigensolver capped at dimension 4000");

  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(
      MatrixXd(op.stiffness), MatrixXd(op.mass.asDiagonal()));
  if (ges.info() != Eigen::Success)
    throw EigensolverFailure("trace: generalized eigensolve failed");
  const int m = std::min<int>(n_modes, op.dofs());

  std::vector<TraceScalingRow> rows;
  rows.reserve(m);
  if (op.mesh.kind == "line") {
    const int n = op.mesh.cells[0];
    const double dx = op.mesh.spacing[0];
    auto val = [&](const VectorXd& v, int i) {
      const int d = op.mesh.dof_of_node[i];
      return d >= 0 ? v[d] : 0.0;
    };
    for (int j = 0; j < m; ++j) {
      const double lam = ges.eigenvalues()[j];
      if (!(lam > 0.0))
        throw EigensolverFailure("trace: nonpositive operator eigenvalue");
      const double h = 1.0 / std::sqrt(lam);
      const VectorXd v = ges.eigenvectors().col(j);
      const double d_lo =
          (-3.0 * val(v, 0) + 4.0 * val(v, 1) - val(v, 2)) / (2.0 * dx);
      const double d_hi =
          (3.0 * val(v, n) - 4.0 * val(v, n - 1) + val(v, n - 2)) /
          (2.0 * dx);
      rows.push_back({lam, h, std::hypot(val(v, 0), val(v, n)),
                      h * std::hypot(d_lo, d_hi)});
    }
    return rows;
  }

  // Tensor grid: trace on the y = 0 edge. Edge functions live on the
  // x-interior nodes (the x-extremal columns are clamped); the fractional
  // norms are spectral in the Dirichlet edge Laplacian.
  const int nx = op.mesh.cells[0];
  const double dx = op.mesh.spacing[0];
  const double dy = op.mesh.spacing[1];
  auto val = [&](const VectorXd& v, int i, int j) {
    const int d = op.mesh.dof_of_node[j * (nx + 1) + i];
    return d >= 0 ? v[d] : 0.0;
  };
  const int ne = nx - 1;
  MatrixXd ke = MatrixXd::Zero(ne, ne);
  for (int i = 0; i < ne; ++i) {
    ke(i, i) = 2.0 / dx;
    if (i + 1 < ne) {
      ke(i, i + 1) = -1.0 / dx;
      ke(i + 1, i) = -1.0 / dx;
    }
  }
  const MatrixXd me = dx * MatrixXd::Identity(ne, ne);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> edge(ke, me);
  if (edge.info() != Eigen::Success)
    throw EigensolverFailure("trace: edge eigensolve failed");
  const VectorXd edge_mu = edge.eigenvalues();
  const MatrixXd edge_basis = edge.eigenvectors();  // me-orthonormal columns

  VectorXd g(ne), dn(ne);
  for (int j = 0; j < m; ++j) {
    const double lam = ges.eigenvalues()[j];
    if (!(lam > 0.0))
      throw EigensolverFailure("trace: nonpositive operator eigenvalue");
    const double h = 1.0 / std::sqrt(lam);
    const VectorXd v = ges.eigenvectors().col(j);
    for (int i = 1; i < nx; ++i) {
      g[i - 1] = val(v, i, 0);
      dn[i - 1] =
          (3.0 * val(v, i, 0) - 4.0 * val(v, i, 1) + val(v, i, 2)) /
          (2.0 * dy);
    }
    const VectorXd ghat = edge_basis.transpose() * (dx * g);
    const VectorXd dhat = edge_basis.transpose() * (dx * (h * dn));
    double q2 = 0.0, r2 = 0.0;
    for (int k = 0; k < ne; ++k) {
      const double w = std::sqrt(1.0 + h * h * edge_mu[k]);
      q2 += w * ghat[k] * ghat[k];
      r2 += dhat[k] * dhat[k] / w;
    }
    rows.push_back({lam, h, std::sqrt(q2), std::sqrt(r2)});
  }
  return rows;
}

void write_energy_csv(const EnergyTrace& trace, std::ostream& out) {
  out << "t,E\n" << std::setprecision(17);
  for (const auto& [t, e] : trace.samples) out << t << ',' << e << '\n';
}

void write_scan_csv(const ResolventScan& scan, std::ostream& out) {
  out << "mu,norm\n" << std::setprecision(17);
  for (size_t i = 0; i < scan.mu_grid.size(); ++i)
    out << scan.mu_grid[i] << ',' << scan.norms[i] << '\n';
}

void write_spectrum_csv(const std::vector<std::complex<double>>& eigs,
                        std::ostream& out) {
  out << "re,im\n" << std::setprecision(17);
  for (const auto& z : eigs) out << z.real() << ',' << z.imag() << '\n';
}

}  // namespace zr::waves
