#pragma once

#include <stdexcept>
#include <string>

namespace iongate {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// trap_modes
struct NoConvergence : Error { using Error::Error; };
struct NotOrthogonal : Error { using Error::Error; };
struct NegativeCurvature : Error { using Error::Error; };

// drive
struct SpeedLimit : Error { using Error::Error; };

// constraints
struct EmptyNullSpace : Error { using Error::Error; };

// phase_forms
struct DimensionMismatch : Error { using Error::Error; };

// solver
struct ZeroMatrix : Error { using Error::Error; };
struct Infeasible : Error { using Error::Error; };
struct DegenerateDirection : Error { using Error::Error; };
struct ProjectionFailed : Error { using Error::Error; };

// targets
struct ZeroTarget : Error { using Error::Error; };
struct BadParams : Error { using Error::Error; };

// fidelity
struct OddRegister : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };

// oracle
struct TruncationError : Error { using Error::Error; };
struct DimensionGuard : Error { using Error::Error; };

// cli
struct ConfigError : Error { using Error::Error; };

}  // namespace iongate
