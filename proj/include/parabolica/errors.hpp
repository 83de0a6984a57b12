#pragma once

#include <stdexcept>
#include <string>

namespace parabolica {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidConfiguration : Error { using Error::Error; };
struct CollisionEvaluation : Error { using Error::Error; };
struct CertificationFailure : Error { using Error::Error; };

struct DomainError : Error { using Error::Error; };
struct NoSolution : Error { using Error::Error; };
struct NoSolutionInClass : Error { using Error::Error; };
struct DegenerateRectilinear : Error { using Error::Error; };
struct DegenerateEndpoints : Error { using Error::Error; };

struct CollisionPath : Error { using Error::Error; };
struct DegeneratePath : Error { using Error::Error; };
struct UnresolvedDegree : Error { using Error::Error; };

struct CollisionEncountered : Error { using Error::Error; };
struct DegreeBroken : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };

struct DegenerateDirections : Error { using Error::Error; };
struct HypothesisViolation : Error { using Error::Error; };
struct InsufficientTail : Error { using Error::Error; };

struct ParseError : Error { using Error::Error; };

}  // namespace parabolica
