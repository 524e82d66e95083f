// Adaptive Dormand-Prince 5(4) integrator with contiguous (dense) output,
// usable in both time directions, plus a bracketed scalar root finder.
// Dense output is the standard quartic interpolant; its local error matches
// the step error order, so event times located on it inherit the step
// tolerance.
#pragma once

#include <Eigen/Dense>
#include <functional>

#include "zr/errors.hpp"

namespace zr::ode {

using RhsFn =
    std::function<void(double s, const Eigen::VectorXd& y, Eigen::VectorXd& dy)>;

struct Options {
  double rtol = 1e-12;
  double atol = 1e-12;
  double h_init = 1e-3;
  double h_max = 0.1;
  // Step magnitude below h_floor * max(1,|s|) aborts with StepFailure.
  double h_floor = 1e-14;
  long max_steps = 2000000;
};

// One accepted step over [s0, s1]; s1 < s0 when integrating backward.
struct DenseStep {
  double s0 = 0.0;
  double s1 = 0.0;
  Eigen::VectorXd r1, r2, r3, r4, r5;

  Eigen::VectorXd eval(double s) const;
  double span() const { return s1 - s0; }
};

class Dopri5 {
 public:
  Dopri5(RhsFn rhs, Options opt = {});

  void start(double s, const Eigen::VectorXd& y);

  // Take one accepted adaptive step from the current state toward s_target
  // (never stepping past it). Returns the dense representation of the step.
  const DenseStep& step(double s_target);

  double s() const { return s_; }
  const Eigen::VectorXd& y() const { return y_; }
  const DenseStep& last() const { return dense_; }
  long steps_taken() const { return steps_; }

 private:
  RhsFn rhs_;
  Options opt_;
  double s_ = 0.0;
  Eigen::VectorXd y_;
  Eigen::VectorXd k1_;  // FSAL derivative at (s_, y_)
  bool have_k1_ = false;
  double h_ = 0.0;
  long steps_ = 0;
  DenseStep dense_;
};

// Classic Brent root bracketing: f(a) and f(b) must have opposite signs.
double brent(const std::function<double(double)>& f, double a, double b,
             double tol_x, int max_iter = 200);

}  // namespace zr::ode
