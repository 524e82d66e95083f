// Error types shared across the library. Every failure mode that callers are
// expected to handle gets its own type so tests can catch it precisely.
#pragma once

#include <stdexcept>
#include <string>

namespace zr {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// geometry
struct NotOnBoundary : Error { using Error::Error; };
struct DegenerateNormal : Error { using Error::Error; };
struct ChartFailure : Error { using Error::Error; };
struct UnsupportedDomain : Error { using Error::Error; };

// flow
struct StepFailure : Error { using Error::Error; };
struct UndeterminedContact : Error { using Error::Error; };
struct CornerBall : Error { using Error::Error; };

// waves
struct SingularShift : Error { using Error::Error; };
struct UnsupportedOperator : Error { using Error::Error; };
struct ResolutionTooLow : Error { using Error::Error; };
struct LinearSolveFailure : Error { using Error::Error; };
struct EigensolverFailure : Error { using Error::Error; };
struct NonPositiveEnergy : Error { using Error::Error; };

// config / cli
struct ConfigError : Error { using Error::Error; };

}  // namespace zr
