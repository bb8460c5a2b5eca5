#include "stochecon/error.hpp"

namespace stochecon {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotOnSimplex: return "NotOnSimplex";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroEndowmentColumn: return "ZeroEndowmentColumn";
    case ErrorCode::EigenvectorFailure: return "EigenvectorFailure";
    case ErrorCode::NonCDModel: return "NonCDModel";
    case ErrorCode::NoSignChange: return "NoSignChange";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::NoExactExpectation: return "NoExactExpectation";
    case ErrorCode::NotPossibleEquilibriumPrice: return "NotPossibleEquilibriumPrice";
    case ErrorCode::SingularHessian: return "SingularHessian";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::NotPossibleCompositeEquilibrium: return "NotPossibleCompositeEquilibrium";
    case ErrorCode::AllInfeasible: return "AllInfeasible";
    case ErrorCode::UnboundedTilt: return "UnboundedTilt";
    case ErrorCode::NonUniqueEquilibrium: return "NonUniqueEquilibrium";
    case ErrorCode::NoAcceptedConfigurations: return "NoAcceptedConfigurations";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::SingularSigma: return "SingularSigma";
    case ErrorCode::TruncationTooTight: return "TruncationTooTight";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

void raise(ErrorCode code, const std::string& what)
{
    throw Error(code, what);
}

}  // namespace stochecon
