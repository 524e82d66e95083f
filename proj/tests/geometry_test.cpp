#include "zr/geometry.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "zr/damping.hpp"
#include "zr/errors.hpp"

namespace geom = zr::geom;
using Eigen::VectorXd;

namespace {

VectorXd vec2(double a, double b) { return (VectorXd(2) << a, b).finished(); }
VectorXd vec3(double a, double b, double c) {
  return (VectorXd(3) << a, b, c).finished();
}

// Peanut-shaped quartic level set (non-convex, no catalog entry).
geom::DomainSpec cassini_domain() {
  geom::DomainSpec d;
  d.dim = 2;
  const double b4 = std::pow(1.05, 4);
  d.phi = [b4](const VectorXd& x) {
    const double r2 = x.squaredNorm();
    return b4 - (r2 * r2 - 2.0 * (x[0] * x[0] - x[1] * x[1]) + 1.0);
  };
  d.psi = [](const VectorXd& x) { return x[1]; };
  d.tol_band = 1e-6;
  d.bbox_lo = vec2(-1.5, -0.5);
  d.bbox_hi = vec2(1.5, 0.5);
  d.diameter = 3.0;
  return d;
}

// Boundary with a cubic inflection at the origin: {y > -x^3}.
geom::DomainSpec cubic_bump_domain() {
  geom::DomainSpec d;
  d.dim = 2;
  d.phi = [](const VectorXd& x) { return x[1] + x[0] * x[0] * x[0]; };
  d.psi = [](const VectorXd& x) { return x[0]; };
  d.tol_band = 1e-6;
  d.bbox_lo = vec2(-1.0, -1.0);
  d.bbox_hi = vec2(1.0, 1.0);
  d.diameter = 2.8;
  return d;
}

geom::MetricField wavy_metric() {
  geom::MetricField m;
  m.dim = 2;
  m.flat = false;
  m.principal = [](const VectorXd& x) {
    return Eigen::MatrixXd(
        (1.0 + 0.2 * std::sin(x[0] + 0.5 * x[1])) *
        Eigen::MatrixXd::Identity(2, 2));
  };
  return m;
}

// Residual of the chart's defining property: the pulled-back principal form
// must split off exactly eta_d^2, with no tangential-normal cross terms.
double reduced_form_defect(const geom::Chart& ch, const geom::MetricField& m,
                           const VectorXd& y, const VectorXd& eta) {
  const VectorXd x = ch.to_ambient(y);
  const Eigen::MatrixXd p = m.principal(x);
  const auto pull = [&](const VectorXd& e) {
    const VectorXd xi = ch.covector_to_ambient(y, e);
    return xi.dot(p * xi);
  };
  VectorXd tan = eta;
  tan[ch.dim() - 1] = 0.0;
  const double ed = eta[ch.dim() - 1];
  return std::abs(pull(eta) - pull(tan) - ed * ed);
}

struct CatalogCase {
  geom::DomainSpec dom;
  // Uniform boundary sample, u in [0,1).
  std::function<VectorXd(double)> boundary;
};

std::vector<CatalogCase> catalog_cases() {
  std::vector<CatalogCase> cases;
  cases.push_back({geom::DomainSpec::disc(), [](double u) {
                     return vec2(std::cos(2 * M_PI * u), std::sin(2 * M_PI * u));
                   }});
  cases.push_back({geom::DomainSpec::disc_exterior(), [](double u) {
                     return vec2(std::cos(2 * M_PI * u), std::sin(2 * M_PI * u));
                   }});
  cases.push_back({geom::DomainSpec::annulus(0.5), [](double u) {
                     const double r = u < 0.5 ? 1.0 : 0.5;
                     const double t = 4 * M_PI * u;
                     return vec2(r * std::cos(t), r * std::sin(t));
                   }});
  cases.push_back({geom::DomainSpec::rectangle(2.0, 1.0), [](double u) {
                     // perimeter walk, corners avoided by the caller's u grid
                     const double per = 2 * (2.0 + 1.0);
                     double s = u * per;
                     if (s < 2.0) return vec2(s, 0.0);
                     s -= 2.0;
                     if (s < 1.0) return vec2(2.0, s);
                     s -= 1.0;
                     if (s < 2.0) return vec2(2.0 - s, 1.0);
                     s -= 2.0;
                     return vec2(0.0, 1.0 - s);
                   }});
  cases.push_back({geom::DomainSpec::halfspace(2), [](double u) {
                     return vec2(2.0 * u - 1.0, 0.0);
                   }});
  cases.push_back({geom::DomainSpec::ball(), [](double u) {
                     const double t = 2 * M_PI * u;
                     const double z = 2.0 * std::fmod(17.0 * u, 1.0) - 1.0;
                     const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
                     return vec3(s * std::cos(t), s * std::sin(t), z);
                   }});
  return cases;
}

}  // namespace

TEST_CASE("smooth step is a monotone bump blend") {
  CHECK(geom::smooth_step(-1.0) == 0.0);
  CHECK(geom::smooth_step(0.0) == 0.0);
  CHECK(geom::smooth_step(1.0) == 1.0);
  CHECK(geom::smooth_step(2.0) == 1.0);
  CHECK(geom::smooth_step(0.5) == doctest::Approx(0.5));
  double prev = 0.0;
  for (double t = 0.0; t <= 1.0; t += 1e-3) {
    const double v = geom::smooth_step(t);
    CHECK(v >= prev);
    prev = v;
  }
  // Flat to all orders at the endpoints: the first difference is tiny.
  CHECK(geom::smooth_step(1e-3) < 1e-300);
  CHECK(1.0 - geom::smooth_step(1.0 - 1e-3) < 1e-300);
}

TEST_CASE("metric fields validate symmetry and positivity") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto eu = geom::MetricField::euclidean(3);
  const auto wavy = wavy_metric();
  for (int i = 0; i < 50; ++i) {
    eu.validate_at(vec3(unit(rng), unit(rng), unit(rng)));
    wavy.validate_at(vec2(unit(rng), unit(rng)));
  }

  geom::MetricField bad;
  bad.dim = 2;
  bad.principal = [](const VectorXd&) {
    return Eigen::MatrixXd((Eigen::MatrixXd(2, 2) << 1, 0.1, 0, 1).finished());
  };
  CHECK_THROWS_AS(bad.validate_at(vec2(0, 0)), zr::Error);

  geom::MetricField indef;
  indef.dim = 2;
  indef.principal = [](const VectorXd&) {
    return Eigen::MatrixXd((Eigen::MatrixXd(2, 2) << 1, 0, 0, -1).finished());
  };
  CHECK_THROWS_AS(indef.validate_at(vec2(0, 0)), zr::Error);
}

TEST_CASE("damping primitives have the advertised supports") {
  const auto strip =
      zr::DampingField::box(vec2(0.3, -10.0), vec2(0.7, 10.0), 2.0);
  CHECK(strip(vec2(0.5, 9.0)) == 2.0);
  CHECK(strip(vec2(0.2, 0.0)) == 0.0);
  CHECK(strip(vec2(0.7, 0.0)) == 0.0);

  const auto soft =
      zr::DampingField::box(vec2(0.3, -10.0), vec2(0.7, 10.0), 1.0, 0.05);
  CHECK(soft(vec2(0.5, 0.0)) == 1.0);
  CHECK(soft(vec2(0.31, 0.0)) > 0.0);
  CHECK(soft(vec2(0.29, 0.0)) == 0.0);

  // The ramp reaches full strength at the outer rim of the unit disc.
  const auto rim = zr::DampingField::radial_step(0.9, 0.05, 1.0);
  CHECK(rim(vec2(1.0, 0.0)) == 1.0);
  CHECK(rim(vec2(0.0, 0.95)) == 1.0);
  CHECK(rim(vec2(0.9, 0.0)) == 0.0);
  CHECK(rim.in_support(vec2(0.0, 0.92)));
  CHECK(!rim.in_support(vec2(0.5, 0.5)));

  const auto blob = zr::DampingField::ball(vec2(0.5, 0.5), 0.2, 1.0, 0.05);
  CHECK(blob(vec2(0.5, 0.5)) == 1.0);
  CHECK(blob(vec2(0.9, 0.5)) == 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    const VectorXd x = vec2(unit(rng), unit(rng));
    CHECK(strip(x) >= 0.0);
    CHECK(soft(x) >= 0.0);
    CHECK(rim(x) >= 0.0);
    CHECK(blob(x) >= 0.0);
  }
}

TEST_CASE("closed-form level-set gradients match finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& c : catalog_cases()) {
    for (int i = 0; i < 40; ++i) {
      // Points in the boundary tube but off the min-kink ridges.
      VectorXd x = c.boundary(unit(rng) * 0.97 + 0.011);
      x += 0.05 * (unit(rng) - 0.5) * c.dom.gradient_phi(x);
      geom::DomainSpec fd = c.dom;
      fd.grad_phi = nullptr;
      const VectorXd g_closed = c.dom.gradient_phi(x);
      const VectorXd g_fd = fd.gradient_phi(x);
      CHECK((g_closed - g_fd).norm() < 1e-8 * (1.0 + g_closed.norm()));
      CHECK(g_closed.norm() > 0.4);  // no degenerate normals near the boundary
    }
  }
}

TEST_CASE("interface transversality: phi and psi gradients independent on Gamma") {
  // disc interface points
  const auto disc = geom::DomainSpec::disc();
  for (double sgn : {1.0, -1.0}) {
    const VectorXd x = vec2(0.0, sgn);
    const VectorXd gp = disc.gradient_phi(x);
    const VectorXd gs = vec2(1.0, 0.0);  // psi = x_0
    const double cross = gp[0] * gs[1] - gp[1] * gs[0];
    CHECK(std::abs(cross) > 0.9);
  }
  // ball equator
  const auto ball = geom::DomainSpec::ball();
  for (double t = 0.1; t < 2 * M_PI; t += 0.7) {
    const VectorXd x = vec3(std::cos(t), std::sin(t), 0.0);
    const Eigen::Vector3d gp = ball.gradient_phi(x);
    const Eigen::Vector3d gs(0.0, 0.0, 1.0);
    CHECK(gp.cross(gs).norm() > 0.9);  // wedge nonzero
  }
}

TEST_CASE("classify_region matches the catalog partition") {
  const auto disc = geom::DomainSpec::disc();
  CHECK(geom::classify_region(disc, vec2(0, 0)) == geom::Region::Interior);
  CHECK(geom::classify_region(disc, vec2(0, 1)) == geom::Region::InterfaceGamma);
  CHECK(geom::classify_region(disc, vec2(0, -1)) == geom::Region::InterfaceGamma);
  CHECK(geom::classify_region(disc, vec2(1, 0)) == geom::Region::NeumannBoundary);
  CHECK(geom::classify_region(disc, vec2(-1, 0)) ==
        geom::Region::DirichletBoundary);
  CHECK(geom::classify_region(disc, vec2(1.1, 0)) == geom::Region::Exterior);

  const auto iv = geom::DomainSpec::interval();
  CHECK(geom::classify_region(iv, VectorXd::Zero(1)) ==
        geom::Region::DirichletBoundary);
  CHECK(geom::classify_region(iv, VectorXd::Ones(1)) ==
        geom::Region::NeumannBoundary);
  CHECK(geom::classify_region(iv, VectorXd::Constant(1, 0.5)) ==
        geom::Region::Interior);

  const auto ball = geom::DomainSpec::ball();
  CHECK(geom::classify_region(ball, vec3(1, 0, 0)) ==
        geom::Region::InterfaceGamma);
  CHECK(geom::classify_region(ball, vec3(0, 0, 1)) ==
        geom::Region::NeumannBoundary);
  CHECK(geom::classify_region(ball, vec3(0, 0, -1)) ==
        geom::Region::DirichletBoundary);
}

TEST_CASE("partition totality over sampled boundaries") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& c : catalog_cases()) {
    for (int i = 0; i < 1000; ++i) {
      const VectorXd x = c.boundary(unit(rng));
      const auto r = geom::classify_region(c.dom, x);
      const bool boundary_kind = r == geom::Region::DirichletBoundary ||
                                 r == geom::Region::NeumannBoundary ||
                                 r == geom::Region::InterfaceGamma;
      CHECK(boundary_kind);
    }
  }
}

TEST_CASE("projection lands on the level set") {
  const auto disc = geom::DomainSpec::disc();
  const VectorXd p = disc.project_to_boundary(vec2(0.3, 0.1));
  CHECK(std::abs(p.norm() - 1.0) < 1e-12);
  CHECK(std::abs(p[0] / p[1] - 3.0) < 1e-12);  // radial projection

  const auto cass = cassini_domain();
  const VectorXd q = cass.project_to_boundary(vec2(0.05, 0.5));
  CHECK(std::abs(cass.phi(q)) < 1e-12);
}

TEST_CASE("catalog charts: roundtrip, boundary level, exact jacobians") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto cases = catalog_cases();
  for (auto& c : cases) {
    const auto metric = geom::MetricField::euclidean(c.dom.dim);
    for (int i = 0; i < 25; ++i) {
      const VectorXd b = c.boundary(unit(rng) * 0.96 + 0.015);
      if (c.dom.near_corner(b)) continue;
      const auto ch = geom::normal_chart(c.dom, metric, b);

      VectorXd y(c.dom.dim);
      for (int k = 0; k + 1 < c.dom.dim; ++k) y[k] = 0.2 * (unit(rng) - 0.5);
      y[c.dom.dim - 1] = 0.15 * unit(rng);
      if (c.dom.catalog_id == "rectangle") y *= 0.05;  // stay off corners

      // boundary level: y_d = 0 lands on {phi = 0}
      VectorXd y0 = y;
      y0[c.dom.dim - 1] = 0.0;
      CHECK(std::abs(c.dom.phi(ch->to_ambient(y0))) < 1e-12);

      // roundtrip
      const VectorXd x = ch->to_ambient(y);
      CHECK((ch->from_ambient(x) - y).norm() < 1e-10);

      // closed-form jacobian vs finite differences of the map itself
      const Eigen::MatrixXd j = ch->jacobian(y);
      const double h = 1e-6;
      for (int col = 0; col < c.dom.dim; ++col) {
        VectorXd yp = y, ym = y;
        yp[col] += h;
        ym[col] -= h;
        const VectorXd fd = (ch->to_ambient(yp) - ch->to_ambient(ym)) / (2 * h);
        CHECK((j.col(col) - fd).norm() < 1e-8);
      }
    }
  }
}

TEST_CASE("catalog charts put the symbol in reduced form") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& c : catalog_cases()) {
    const auto metric = geom::MetricField::euclidean(c.dom.dim);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const VectorXd b = c.boundary(unit(rng) * 0.96 + 0.015);
      if (c.dom.near_corner(b)) continue;
      const auto ch = geom::normal_chart(c.dom, metric, b);
      VectorXd y(c.dom.dim), eta(c.dom.dim);
      for (int k = 0; k < c.dom.dim; ++k) {
        y[k] = 0.1 * (unit(rng) - 0.5);
        eta[k] = 2.0 * (unit(rng) - 0.5);
      }
      y[c.dom.dim - 1] = 0.1 * unit(rng);
      if (c.dom.catalog_id == "rectangle") y.head(c.dom.dim - 1) *= 0.1;
      worst = std::max(worst, reduced_form_defect(*ch, metric, y, eta));
    }
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("interval charts reduce the symbol at both ends") {
  const auto dom = geom::DomainSpec::interval();
  const auto metric = geom::MetricField::euclidean(1);
  const auto left = geom::normal_chart(dom, metric, VectorXd::Zero(1));
  const auto right = geom::normal_chart(dom, metric, VectorXd::Ones(1));
  CHECK(left->to_ambient(VectorXd::Constant(1, 0.3))[0] == doctest::Approx(0.3));
  CHECK(right->to_ambient(VectorXd::Constant(1, 0.3))[0] == doctest::Approx(0.7));
  for (double ed : {-1.0, 0.5, 2.0}) {
    CHECK(reduced_form_defect(*left, metric, VectorXd::Constant(1, 0.2),
                              VectorXd::Constant(1, ed)) < 1e-12);
    CHECK(reduced_form_defect(*right, metric, VectorXd::Constant(1, 0.2),
                              VectorXd::Constant(1, ed)) < 1e-12);
  }
}

TEST_CASE("numerical planar chart handles generic domains and metrics") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct GenericCase {
    geom::DomainSpec dom;
    geom::MetricField metric;
    VectorXd seed;  // projected onto the boundary
  };
  std::vector<GenericCase> cases;
  cases.push_back({cassini_domain(), geom::MetricField::euclidean(2),
                   vec2(0.05, 0.5)});
  cases.push_back({cassini_domain(), wavy_metric(), vec2(1.2, 0.3)});
  cases.push_back({cubic_bump_domain(), geom::MetricField::euclidean(2),
                   vec2(0.4, -0.4 * 0.4 * 0.4)});

  for (auto& c : cases) {
    const VectorXd b = c.dom.project_to_boundary(c.seed);
    const auto ch = geom::normal_chart(c.dom, c.metric, b);
    REQUIRE(std::abs(c.dom.phi(ch->to_ambient(vec2(0.07, 0.0)))) < 1e-9);

    double worst_form = 0.0, worst_round = 0.0;
    for (int i = 0; i < 6; ++i) {
      VectorXd y = vec2(0.12 * (unit(rng) - 0.5), 0.08 * unit(rng));
      VectorXd eta = vec2(2 * unit(rng) - 1, 2 * unit(rng) - 1);
      worst_form = std::max(worst_form,
                            reduced_form_defect(*ch, c.metric, y, eta));
      const VectorXd x = ch->to_ambient(y);
      worst_round = std::max(worst_round, (ch->from_ambient(x) - y).norm());
    }
    CHECK(worst_form <= 1e-6);
    CHECK(worst_round <= 1e-8);
  }
}

TEST_CASE("chart construction rejects bad base points") {
  const auto disc = geom::DomainSpec::disc();
  const auto eu2 = geom::MetricField::euclidean(2);
  CHECK_THROWS_AS(geom::normal_chart(disc, eu2, vec2(0.5, 0.0)),
                  zr::NotOnBoundary);

  const auto rect = geom::DomainSpec::rectangle(2.0, 1.0);
  CHECK_THROWS_AS(geom::normal_chart(rect, eu2, vec2(0.0, 5e-4)),
                  zr::CornerBall);

  // Double-well level set whose gradient vanishes on its own zero set.
  geom::DomainSpec degen;
  degen.dim = 2;
  degen.phi = [](const VectorXd& x) {
    const double v = 0.5 * (1.0 - x.squaredNorm());
    return v * v;
  };
  degen.psi = [](const VectorXd& x) { return x[0]; };
  degen.tol_band = 1e-6;
  CHECK_THROWS_AS(geom::normal_chart(degen, eu2, vec2(1.0, 0.0)),
                  zr::DegenerateNormal);

  // No numerical chart path above the plane.
  geom::DomainSpec sphere;
  sphere.dim = 3;
  sphere.phi = [](const VectorXd& x) { return 0.5 * (1.0 - x.squaredNorm()); };
  sphere.psi = [](const VectorXd& x) { return x[2]; };
  sphere.tol_band = 1e-6;
  geom::MetricField curved3 = wavy_metric();
  curved3.dim = 3;
  curved3.flat = false;
  curved3.principal = [](const VectorXd&) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Identity(3, 3));
  };
  CHECK_THROWS_AS(geom::normal_chart(sphere, curved3, vec3(1, 0, 0)),
                  zr::UnsupportedDomain);
}

TEST_CASE("one-dimensional chart with a variable coefficient") {
  geom::DomainSpec dom = geom::DomainSpec::interval();
  geom::MetricField m;
  m.dim = 1;
  m.flat = false;
  m.principal = [](const VectorXd&) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Constant(1, 1, 4.0));
  };
  const auto ch = geom::normal_chart(dom, m, VectorXd::Zero(1));
  // speed sqrt(p11) = 2, so depth y maps to x = 2y
  CHECK(ch->to_ambient(VectorXd::Constant(1, 0.1))[0] == doctest::Approx(0.2));
  CHECK(ch->from_ambient(VectorXd::Constant(1, 0.2))[0] == doctest::Approx(0.1));
  for (double ed : {-0.7, 0.3})
    CHECK(reduced_form_defect(*ch, m, VectorXd::Constant(1, 0.05),
                              VectorXd::Constant(1, ed)) < 1e-9);
}
