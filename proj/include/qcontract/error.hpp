// error.hpp: error codes and the exception type thrown by every qcontract routine

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qcontract {

enum class ErrorCode {
    NotSquare,
    NotHermitian,
    NotPositive,
    TraceZero,
    ConvergenceFailure,
    DomainError,
    UnsupportedOrder,
    DimensionMismatch,
    SingularReference,
    NotTracePreserving,
    NotCompletelyPositive,
    DegenerateFixedSpace,
    TraceZeroEigenvector,
    NotStochastic,
    NotProbability,
    ParameterOutOfRange,
    NotOperatorConvex,
    QuadratureFailure,
    AllRestartsDegenerate,
    NotPrimitive,
    InvalidArgument,
    ParseError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::NotPositive: return "NotPositive";
    case ErrorCode::TraceZero: return "TraceZero";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularReference: return "SingularReference";
    case ErrorCode::NotTracePreserving: return "NotTracePreserving";
    case ErrorCode::NotCompletelyPositive: return "NotCompletelyPositive";
    case ErrorCode::DegenerateFixedSpace: return "DegenerateFixedSpace";
    case ErrorCode::TraceZeroEigenvector: return "TraceZeroEigenvector";
    case ErrorCode::NotStochastic: return "NotStochastic";
    case ErrorCode::NotProbability: return "NotProbability";
    case ErrorCode::ParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorCode::NotOperatorConvex: return "NotOperatorConvex";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::AllRestartsDegenerate: return "AllRestartsDegenerate";
    case ErrorCode::NotPrimitive: return "NotPrimitive";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace qcontract
