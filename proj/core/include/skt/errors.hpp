#pragma once

#include <stdexcept>
#include <string>

namespace skt {

// Common base so callers can catch everything from this library at once.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// grid / linear algebra
struct InvalidDomain : Error { using Error::Error; };
struct SingularMatrix : Error { using Error::Error; };
struct ConvergenceFailure : Error { using Error::Error; };

// variable transforms
struct NegativeDiscriminant : Error { using Error::Error; };
struct DegenerateDiscriminant : Error { using Error::Error; };

// Newton
struct MaxIterExceeded : Error { using Error::Error; };
struct LineSearchFailure : Error { using Error::Error; };
struct SingularJacobian : Error { using Error::Error; };

// continuation
struct SeedFailure : Error { using Error::Error; };
struct StepFailure : Error { using Error::Error; };
struct SwitchFailure : Error { using Error::Error; };

// limiting problems
struct NoPositiveSolution : Error { using Error::Error; };
struct IterationStall : Error { using Error::Error; };
struct NoSolutionInClass : Error { using Error::Error; };
struct BisectionFailure : Error { using Error::Error; };
struct NewtonFailure : Error { using Error::Error; };

// sweeps / classification
struct SweepBroken : Error { using Error::Error; };
struct DegenerateFit : Error { using Error::Error; };

// configuration and I/O
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct UsageError : Error { using Error::Error; };
struct SchemaMismatch : Error { using Error::Error; };
struct EmptyData : Error { using Error::Error; };

} // namespace skt
