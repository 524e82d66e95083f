#include "zr/ode.hpp"

#include <algorithm>
#include <cmath>

namespace zr::ode {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Error weights 5th minus embedded 4th order.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output coefficients (Hairer, Norsett, Wanner).
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

}  // namespace

Eigen::VectorXd DenseStep::eval(double s) const {
  const double h = s1 - s0;
  const double th = (h == 0.0) ? 0.0 : (s - s0) / h;
  const double th1 = 1.0 - th;
  return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
}

Dopri5::Dopri5(RhsFn rhs, Options opt) : rhs_(std::move(rhs)), opt_(opt) {}

void Dopri5::start(double s, const Eigen::VectorXd& y) {
  s_ = s;
  y_ = y;
  have_k1_ = false;
  h_ = 0.0;
  steps_ = 0;
}

const DenseStep& Dopri5::step(double s_target) {
  const int n = static_cast<int>(y_.size());
  const double dir = (s_target >= s_) ? 1.0 : -1.0;
  if (s_target == s_) throw StepFailure("ode: zero-length step requested");

  if (!have_k1_) {
    k1_.resize(n);
    rhs_(s_, y_, k1_);
    have_k1_ = true;
  }
  if (h_ == 0.0) h_ = opt_.h_init;
  double h = dir * std::min(std::abs(h_), opt_.h_max);

  Eigen::VectorXd k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n),
      yerr(n);

  for (int attempt = 0; attempt < 200; ++attempt) {
    if (++steps_ > opt_.max_steps)
      throw StepFailure("ode: max step count exceeded");
    // Clamp to the target; never step past it.
    bool clamped = false;
    if ((s_ + h - s_target) * dir > 0.0) {
      h = s_target - s_;
      clamped = true;
    }
    if (std::abs(h) < opt_.h_floor * std::max(1.0, std::abs(s_)))
      throw StepFailure("ode: step size underflow");

    ytmp = y_ + h * (a21 * k1_);
    rhs_(s_ + c2 * h, ytmp, k2);
    ytmp = y_ + h * (a31 * k1_ + a32 * k2);
    rhs_(s_ + c3 * h, ytmp, k3);
    ytmp = y_ + h * (a41 * k1_ + a42 * k2 + a43 * k3);
    rhs_(s_ + c4 * h, ytmp, k4);
    ytmp = y_ + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4);
    rhs_(s_ + c5 * h, ytmp, k5);
    ytmp = y_ + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs_(s_ + h, ytmp, k6);
    ynew = y_ + h * (b1 * k1_ + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs_(s_ + h, ynew, k7);  // FSAL
    yerr = h * (e1 * k1_ + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sc =
          opt_.atol + opt_.rtol * std::max(std::abs(y_[i]), std::abs(ynew[i]));
      const double q = yerr[i] / sc;
      err += q * q;
    }
    err = std::sqrt(err / n);

    (void)clamped;
    if (err <= 1.0) {
      dense_.s0 = s_;
      dense_.s1 = s_ + h;
      dense_.r1 = y_;
      dense_.r2 = ynew - y_;
      dense_.r3 = h * k1_ - dense_.r2;
      dense_.r4 = dense_.r2 - h * k7 - dense_.r3;
      dense_.r5 = h * (d1 * k1_ + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 +
                       d7 * k7);
      s_ += h;
      y_ = ynew;
      k1_ = k7;
      const double fac =
          std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 0.2, 5.0);
      h_ = h * fac;
      return dense_;
    }
    const double fac =
        std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
    h *= fac;
  }
  throw StepFailure("ode: repeated step rejection");
}

double brent(const std::function<double(double)>& f, double a, double b,
             double tol_x, int max_iter) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) throw Error("brent: root not bracketed");
  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol1 = 2.0 * 1e-16 * std::abs(b) + 0.5 * tol_x;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      const double s = fb / fa;
      double p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc, r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q),
                             std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
    fb = f(b);
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      e = d = b - a;
    }
  }
  return b;
}

}  // namespace zr::ode
