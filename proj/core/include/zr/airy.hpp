// Airy-function machinery on the rotated rays z = omega*x, omega = e^{2 i eps
// pi/3}, eps = +-1, for real x: the log-derivative ratio alpha, and the
// envelope weight beta built from |Ai(omega x)| and a slowly decaying tail.
//
// Evaluation strategy: entire power series for |x| < 8 with extended-precision
// accumulation (the rotated argument has real cube, so the series cores are
// real), and the large-argument expansion on |x| >= 8. The switchover at 8 is
// where the expansion's optimal-truncation error (~1e-13 relative) drops below
// every tolerance used here.
#pragma once

#include <complex>
#include <string>
#include <vector>

namespace zr::airy {

struct AiPair {
  std::complex<double> ai;
  std::complex<double> aip;
};

inline constexpr double kSwitchover = 8.0;

// e^{2 i eps pi / 3}
std::complex<double> omega(int eps);

// Ai, Ai' at z = omega(eps) * x.
AiPair ai_rotated(double x, int eps);

// Ai, Ai' at real z > -8 (power series below 8, expansion above).
AiPair ai_real(double x);

// alpha(x) = -omega * Ai'(omega x) / Ai(omega x).
// Smooth, Re alpha < 0, alpha' = alpha^2 - x.
std::complex<double> alpha(double x, int eps = +1);

// Envelope weight: beta = chi0*gamma2 + (1-chi0)*gamma1 with
// gamma1 = |Ai(omega x)|, gamma2 = C0 * (1+x^2)^{-1/8}.
// Equal to gamma1 on x <= 0 and to gamma2 on x >= 1; satisfies
// -beta' - beta*Re(alpha) >= 0 and beta ~ (1+x^2)^{-1/8}.
double beta(double x);
double beta_derivative(double x);  // analytic, via gamma1' = -gamma1*Re(alpha)

double envelope_constant();  // C0, frozen from a one-time bracketing search
double chi0(double t);       // smooth monotone step, 0 on t<=0, 1 on t>=1

// One row of the verification table produced by `zr airy-verify`.
struct PropertyCheck {
  std::string name;
  double worst = 0.0;  // worst observed value (signed; see `pass` convention)
  double bound = 0.0;
  bool pass = false;
};

// Runs the full property suite on fixed grids; see the CLI for serialization.
std::vector<PropertyCheck> verify_properties();

namespace detail {
// Branch evaluators exposed for seam tests.
AiPair ai_rotated_power(double x, int eps);
AiPair ai_rotated_asymptotic(double x, int eps);
AiPair ai_real_power(double x);
AiPair ai_real_asymptotic(double x);
}  // namespace detail

}  // namespace zr::airy
