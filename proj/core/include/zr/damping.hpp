// Nonnegative damping coefficients a(x). The control region is the open set
// {a > 0}; the ramped primitives keep it open by construction.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <utility>

namespace zr {

struct DampingField {
  int dim = 0;
  std::function<double(const Eigen::VectorXd&)> a;

  double operator()(const Eigen::VectorXd& x) const { return a(x); }

  // The control region is read through a strict threshold so that ramp tails
  // below numerical noise do not count as damped.
  bool in_support(const Eigen::VectorXd& x, double a_min = 1e-12) const {
    return a(x) > a_min;
  }

  static DampingField zero(int dim) {
    return {dim, [](const Eigen::VectorXd&) { return 0.0; }};
  }

  static DampingField constant(int dim, double amp) {
    return {dim, [amp](const Eigen::VectorXd&) { return amp; }};
  }

  // amp inside [lo + ramp, hi - ramp], zero outside the open box (lo, hi),
  // C¹ ramps between. ramp = 0 gives the sharp indicator of the open box.
  static DampingField box(Eigen::VectorXd lo, Eigen::VectorXd hi, double amp,
                          double ramp = 0.0) {
    const int d = static_cast<int>(lo.size());
    return {d, [lo = std::move(lo), hi = std::move(hi), amp,
                ramp](const Eigen::VectorXd& x) {
              double v = amp;
              for (int i = 0; i < lo.size(); ++i) {
                if (x[i] <= lo[i] || x[i] >= hi[i]) return 0.0;
                if (ramp > 0.0) {
                  v *= smoothstep((x[i] - lo[i]) / ramp);
                  v *= smoothstep((hi[i] - x[i]) / ramp);
                }
              }
              return v;
            }};
  }

  // amp for |x - center| <= radius - ramp, zero outside the open ball,
  // C¹ ramp between.
  static DampingField ball(Eigen::VectorXd center, double radius, double amp,
                           double ramp = 0.0) {
    const int d = static_cast<int>(center.size());
    return {d, [center = std::move(center), radius, ramp,
                amp](const Eigen::VectorXd& x) {
              const double r = (x - center).norm();
              if (r >= radius) return 0.0;
              if (ramp <= 0.0 || r <= radius - ramp) return amp;
              return amp * smoothstep((radius - r) / ramp);
            }};
  }

  // Zero for |x| <= r0, amp for |x| >= r0 + ramp, C¹ ramp between.
  static DampingField radial_step(double r0, double ramp, double amp,
                                  int dim = 2) {
    return {dim, [r0, ramp, amp](const Eigen::VectorXd& x) {
              const double r = x.norm();
              if (r <= r0) return 0.0;
              if (ramp <= 0.0 || r >= r0 + ramp) return amp;
              return amp * smoothstep((r - r0) / ramp);
            }};
  }

 private:
  static double smoothstep(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
  }
};

}  // namespace zr
