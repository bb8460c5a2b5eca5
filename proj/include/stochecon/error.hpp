#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stochecon {

enum class ErrorCode {
    InvalidArgument,
    NotOnSimplex,
    DimensionMismatch,
    ZeroEndowmentColumn,
    EigenvectorFailure,
    NonCDModel,
    NoSignChange,
    EmptySupport,
    NoExactExpectation,
    NotPossibleEquilibriumPrice,
    SingularHessian,
    ConvergenceFailure,
    NotPossibleCompositeEquilibrium,
    AllInfeasible,
    UnboundedTilt,
    NonUniqueEquilibrium,
    NoAcceptedConfigurations,
    TooLarge,
    SingularSigma,
    TruncationTooTight,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& what);

}  // namespace stochecon
