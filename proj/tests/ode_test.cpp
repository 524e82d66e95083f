#include "zr/ode.hpp"

#include <cmath>

#include "doctest.h"

using Eigen::VectorXd;

namespace {

// Harmonic oscillator, closed-form flow for accuracy checks.
void harmonic(double, const VectorXd& y, VectorXd& dy) {
  dy.resize(2);
  dy[0] = y[1];
  dy[1] = -y[0];
}

}  // namespace

TEST_CASE("dopri5 reproduces the harmonic flow to tolerance") {
  zr::ode::Options opt;
  opt.rtol = opt.atol = 1e-12;
  zr::ode::Dopri5 solver(harmonic, opt);
  VectorXd y0(2);
  y0 << 1.0, 0.0;
  solver.start(0.0, y0);
  const double T = 20.0;
  while (solver.s() < T) solver.step(T);
  CHECK(solver.s() == doctest::Approx(T).epsilon(1e-15));
  CHECK(std::abs(solver.y()[0] - std::cos(T)) < 1e-9);
  CHECK(std::abs(solver.y()[1] + std::sin(T)) < 1e-9);
}

TEST_CASE("dopri5 integrates backward") {
  zr::ode::Options opt;
  opt.rtol = opt.atol = 1e-12;
  zr::ode::Dopri5 solver(harmonic, opt);
  VectorXd y0(2);
  y0 << 1.0, 0.0;
  solver.start(0.0, y0);
  const double T = -7.0;
  while (solver.s() > T) solver.step(T);
  CHECK(std::abs(solver.y()[0] - std::cos(T)) < 1e-9);
  CHECK(std::abs(solver.y()[1] + std::sin(T)) < 1e-9);
}

TEST_CASE("dense output interpolates inside a step") {
  zr::ode::Options opt;
  opt.rtol = opt.atol = 1e-10;
  opt.h_max = 0.5;
  zr::ode::Dopri5 solver(harmonic, opt);
  VectorXd y0(2);
  y0 << 0.0, 1.0;
  solver.start(0.0, y0);
  double worst = 0.0;
  while (solver.s() < 10.0) {
    const auto& st = solver.step(10.0);
    for (int i = 1; i < 8; ++i) {
      const double s = st.s0 + st.span() * i / 8.0;
      const VectorXd y = st.eval(s);
      worst = std::max(worst, std::abs(y[0] - std::sin(s)));
    }
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("brent locates a bracketed root") {
  const double r =
      zr::ode::brent([](double x) { return std::cos(x); }, 1.0, 2.0, 1e-14);
  CHECK(std::abs(r - M_PI / 2) < 1e-12);
  CHECK_THROWS_AS(
      zr::ode::brent([](double x) { return 1.0 + x * x; }, 0.0, 1.0, 1e-12),
      zr::Error);
}
