#include "zr/airy.hpp"

#include <cmath>
#include <cstdlib>

#include "zr/errors.hpp"

namespace zr::airy {

namespace {

using cplx = std::complex<double>;
using f128 = __float128;

// Parse a decimal literal into __float128 without libquadmath. Good to the
// last few ulps, which is far below the series truncation floor.
f128 parse_f128(const char* s) {
  f128 value = 0;
  f128 scale = 1;
  bool frac = false, neg = false;
  for (const char* p = s; *p; ++p) {
    if (*p == '-') { neg = true; continue; }
    if (*p == '.') { frac = true; continue; }
    value = value * 10 + (*p - '0');
    if (frac) scale *= 10;
  }
  value /= scale;
  return neg ? -value : value;
}

// Ai(0) = 3^{-2/3}/Gamma(2/3), -Ai'(0) = 3^{-1/3}/Gamma(1/3).
const f128 kAi0 = parse_f128("0.355028053887817239260063186004183176397");
const f128 kAip0 = parse_f128("0.258819403792806798405183560189203963479");

// Entire-series cores. With w = z^3:
//   Ai(z)  = kAi0 * F(w) - kAip0 * z * G(w)
//   Ai'(z) = kAi0 * z^2 * F2(w) - kAip0 * G2(w)
// Term ratios derive from the hypergeometric structure of the two
// fundamental solutions of y'' = z y. Accumulated in __float128: on the
// rotated rays w = x^3 is real, and the alternating region loses up to
// ~e^{(4/3)|x|^{3/2}} ~ 1e13 digits of cancellation at |x| = 8.
struct SeriesCoreQ {
  f128 F, G, F2, G2;
};

SeriesCoreQ series_core_q(double x_in) {
  // The cube must be formed in extended precision: rounding w = x^3 to double
  // shifts the two series halves off the diagonal they cancel along, leaving
  // an O(|G| eps) residue that dwarfs the e^{-2 zeta}-sized result.
  const f128 x = x_in;
  const f128 w = x * x * x;
  f128 F = 1, G = 1, G2 = 1, F2 = 0.5;
  f128 tF = 1, tG = 1, tG2 = 1, tF2 = 0.5;
  for (int k = 0; k < 400; ++k) {
    const f128 k3 = 3 * k;
    tF *= w / ((k3 + 2) * (k3 + 3));
    F += tF;
    tG *= w / ((k3 + 3) * (k3 + 4));
    G += tG;
    tG2 *= w / ((k3 + 1) * (k3 + 3));
    G2 += tG2;
    const f128 m3 = 3 * (k + 1);
    tF2 *= w / (m3 * (m3 + 2));
    F2 += tF2;
    f128 amax = tF < 0 ? -tF : tF;
    f128 t = tG < 0 ? -tG : tG;
    if (t > amax) amax = t;
    t = tF2 < 0 ? -tF2 : tF2;
    if (t > amax) amax = t;
    t = tG2 < 0 ? -tG2 : tG2;
    if (t > amax) amax = t;
    if (k > 4 && double(amax) < 1e-36 * (1.0 + std::abs(double(F)))) break;
  }
  return {F, G, F2, G2};
}

constexpr double kSqrtPi = 1.7724538509055160273;

// u- and v-series of the large-argument expansion, evaluated at t = 1/zeta,
// truncated at the smallest term. Coefficient recurrences:
//   c_n = c_{n-1} (6n-5)(6n-1) / (72 n),   d_n = -(6n+1)/(6n-1) c_n.
void asymptotic_sums(cplx t, cplx& Sc, cplx& Sd) {
  Sc = 1.0;
  Sd = 1.0;
  double c = 1.0;
  cplx tp = 1.0;
  double prev = 1e300;
  for (int n = 1; n <= 60; ++n) {
    c *= (6.0 * n - 5.0) * (6.0 * n - 1.0) / (72.0 * n);
    const double d = -(6.0 * n + 1.0) / (6.0 * n - 1.0) * c;
    tp *= -t;
    const double mag = c * std::abs(tp);
    if (mag > prev) break;  // smallest-term truncation
    Sc += c * tp;
    Sd += d * tp;
    prev = mag;
    if (mag < 1e-20) break;
  }
}

cplx principal_pow(cplx z, double p) {
  return std::exp(p * std::log(z));
}

}  // namespace

std::complex<double> omega(int eps) {
  return {-0.5, eps >= 0 ? std::sqrt(3.0) / 2.0 : -std::sqrt(3.0) / 2.0};
}

namespace detail {

AiPair ai_rotated_power(double x, int eps) {
  const SeriesCoreQ s = series_core_q(x);
  const cplx w = omega(eps);
  const cplx z = w * x;
  // Combine in double; the extended-precision cores already absorbed the
  // cancellation. The combination below has no further cancellation for the
  // rotated argument because the two halves differ in phase.
  const cplx ai = double(kAi0 * s.F) - double(kAip0) * z * double(s.G);
  const cplx aip =
      double(kAi0) * z * z * double(s.F2) - double(kAip0 * s.G2);
  return {ai, aip};
}

AiPair ai_real_power(double x) {
  const SeriesCoreQ s = series_core_q(x);
  // Real argument: combine in extended precision, the two halves cancel to
  // e^{-2 zeta} size on the positive axis.
  const f128 xq = x;
  const f128 ai = kAi0 * s.F - kAip0 * xq * s.G;
  const f128 aip = kAi0 * xq * xq * s.F2 - kAip0 * s.G2;
  return {{double(ai), 0.0}, {double(aip), 0.0}};
}

AiPair ai_rotated_asymptotic(double x, int eps) {
  const cplx w = omega(eps);
  const cplx z = w * x;
  const cplx sz = std::sqrt(z);
  const cplx zeta = (2.0 / 3.0) * z * sz;
  cplx Sc, Sd;
  asymptotic_sums(1.0 / zeta, Sc, Sd);
  const cplx pref = std::exp(-zeta) / (2.0 * kSqrtPi);
  const cplx z14 = principal_pow(z, 0.25);
  return {pref / z14 * Sc, -pref * z14 * Sd};
}

AiPair ai_real_asymptotic(double x) {
  if (x <= 0) throw Error("airy: real expansion only valid for x > 0");
  const double sz = std::sqrt(x);
  const double zeta = (2.0 / 3.0) * x * sz;
  cplx Sc, Sd;
  asymptotic_sums(cplx(1.0 / zeta, 0.0), Sc, Sd);
  const double pref = std::exp(-zeta) / (2.0 * kSqrtPi);
  const double z14 = std::pow(x, 0.25);
  return {{pref / z14 * Sc.real(), 0.0}, {-pref * z14 * Sd.real(), 0.0}};
}

}  // namespace detail

AiPair ai_rotated(double x, int eps) {
  if (std::abs(x) < kSwitchover) return detail::ai_rotated_power(x, eps);
  return detail::ai_rotated_asymptotic(x, eps);
}

AiPair ai_real(double x) {
  if (x <= -kSwitchover)
    throw Error("airy: ai_real not supported below the switchover");
  if (x < kSwitchover) return detail::ai_real_power(x);
  return detail::ai_real_asymptotic(x);
}

std::complex<double> alpha(double x, int eps) {
  if (std::abs(x) < kSwitchover) {
    const AiPair p = detail::ai_rotated_power(x, eps);
    return -omega(eps) * p.aip / p.ai;
  }
  // Ratio form of the expansion: alpha = omega z^{1/2} Sd/Sc. The
  // exponential prefactors cancel, so this is overflow-free for all x.
  const cplx w = omega(eps);
  const cplx z = w * x;
  const cplx sz = std::sqrt(z);
  const cplx zeta = (2.0 / 3.0) * z * sz;
  cplx Sc, Sd;
  asymptotic_sums(1.0 / zeta, Sc, Sd);
  return w * sz * Sd / Sc;
}

double envelope_constant() {
  // Largest admissible value is min over [0,1] of |Ai(omega x)| <x>^{1/4},
  // attained at x = 0 with value Ai(0) ~ 0.35503. Frozen with margin from a
  // one-time bracketing search (see the unit test that re-derives it).
  return 0.3;
}

double chi0(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

namespace {

double chi0_derivative(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  const double ap = a / (t * t);
  const double bp = -b / ((1.0 - t) * (1.0 - t));
  return (ap * b - a * bp) / ((a + b) * (a + b));
}

double gamma1(double x) { return std::abs(ai_rotated(x, +1).ai); }

double gamma2(double x) {
  return envelope_constant() * std::pow(1.0 + x * x, -0.125);
}

double gamma2_derivative(double x) {
  return envelope_constant() * (-0.25 * x) * std::pow(1.0 + x * x, -1.125);
}

}  // namespace

double beta(double x) {
  const double c = chi0(x);
  if (c == 0.0) return gamma1(x);
  if (c == 1.0) return gamma2(x);
  return c * gamma2(x) + (1.0 - c) * gamma1(x);
}

double beta_derivative(double x) {
  const double c = chi0(x);
  const double cp = chi0_derivative(x);
  const double g1 = (c < 1.0) ? gamma1(x) : 0.0;
  const double g1p = (c < 1.0) ? -g1 * alpha(x, +1).real() : 0.0;
  const double g2 = gamma2(x);
  const double g2p = gamma2_derivative(x);
  return cp * (g2 - g1) + c * g2p + (1.0 - c) * g1p;
}

std::vector<PropertyCheck> verify_properties() {
  std::vector<PropertyCheck> out;

  // Riccati residual |alpha' - (alpha^2 - x)| on [-10,10], 4th-order FD.
  {
    PropertyCheck c{"riccati_residual", 0.0, 1e-6, false};
    const double h = 1e-2;
    for (double x = -10.0; x <= 10.0 + 1e-12; x += 0.05) {
      const cplx d = (-alpha(x + 2 * h, +1) + 8.0 * alpha(x + h, +1) -
                      8.0 * alpha(x - h, +1) + alpha(x - 2 * h, +1)) /
                     (12.0 * h);
      const cplx a = alpha(x, +1);
      const double r = std::abs(d - (a * a - x));
      if (r > c.worst) c.worst = r;
    }
    c.pass = c.worst <= c.bound;
    out.push_back(c);
  }

  // Re alpha < 0 on [-50,50].
  {
    PropertyCheck c{"re_alpha_negative", -1e300, 0.0, false};
    for (double x = -50.0; x <= 50.0 + 1e-12; x += 0.05) {
      for (int eps : {+1, -1}) {
        const double re = alpha(x, eps).real();
        if (re > c.worst) c.worst = re;
      }
    }
    c.pass = c.worst < c.bound;
    out.push_back(c);
  }

  // Conjugation symmetry between the two rays.
  {
    PropertyCheck c{"conjugation_symmetry", 0.0, 1e-12, false};
    for (double x = -30.0; x <= 30.0 + 1e-12; x += 0.1) {
      const double r =
          std::abs(alpha(x, -1) - std::conj(alpha(x, +1)));
      if (r > c.worst) c.worst = r;
    }
    c.pass = c.worst <= c.bound;
    out.push_back(c);
  }

  // Remainder of the two-term expansion, x^{5/2}-weighted, on [5,50].
  {
    PropertyCheck c{"expansion_remainder", 0.0, 0.5, false};
    for (double x = 5.0; x <= 50.0 + 1e-12; x += 0.1) {
      const cplx rem = alpha(x, +1) + std::sqrt(x) - 1.0 / (4.0 * x);
      const double r = std::abs(rem) * std::pow(x, 2.5);
      if (r > c.worst) c.worst = r;
    }
    c.pass = c.worst <= c.bound;
    out.push_back(c);
  }

  // beta positivity and the barrier inequality -beta' - beta Re alpha >= 0.
  {
    PropertyCheck pos{"beta_positive", 1e300, 0.0, false};
    PropertyCheck bar{"beta_barrier", 1e300, -1e-7, false};
    PropertyCheck env{"beta_envelope_lower", 1e300, 0.2, false};
    for (double x = -20.0; x <= 20.0 + 1e-12; x += 1e-2) {
      const double b = beta(x);
      if (b < pos.worst) pos.worst = b;
      const double lhs = -beta_derivative(x) - b * alpha(x, +1).real();
      if (lhs < bar.worst) bar.worst = lhs;
      const double e = b * std::pow(1.0 + x * x, 0.125);
      if (e < env.worst) env.worst = e;
    }
    pos.pass = pos.worst > 0.0;
    bar.pass = bar.worst >= bar.bound;
    env.pass = env.worst >= env.bound;
    out.push_back(pos);
    out.push_back(bar);
    out.push_back(env);
  }

  return out;
}

}  // namespace zr::airy
