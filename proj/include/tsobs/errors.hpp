#pragma once

#include <stdexcept>
#include <string>

namespace tsobs {

// Every failure the library can signal, in one taxonomy so callers (and the
// CLI exit-code mapping) can dispatch on the kind instead of parsing messages.
enum class ErrorKind {
    // numerics
    NonSquare,
    NonFinite,
    NotPositiveDefinite,
    Singular,
    // model / file parsing
    ParseError,
    DimensionMismatch,
    // lmi
    ShapeMismatch,
    MissingVariable,
    MalformedProblem,
    InconsistentEqualities,
    // sdp
    NotStrictlyFeasible,
    NumericalFailure,
    // synthesis
    PremiseNotMeasured,
    MultipleLeftVertices,
    NonpositiveBounds,
    Infeasible,
    SingularP3,
    SingularP,
    VerificationFailed,
    // simulation / cli
    MissingBox,
    UnknownFixture,
    Usage,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace tsobs
