#include "relthresh/error.hpp"

namespace relthresh {

ErrorCategory category_of(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::Domain:
    case ErrorCode::RiskOverflow:
    case ErrorCode::NonPositiveSlope:
    case ErrorCode::Convergence:
    case ErrorCode::UndefinedCorrelation:
    case ErrorCode::SingularDesign:
    case ErrorCode::UndefinedMeasure:
        return ErrorCategory::Numerical;
    case ErrorCode::UnsupportedDesign:
    case ErrorCode::UnsupportedK:
    case ErrorCode::Config:
    case ErrorCode::NotInFixture:
    case ErrorCode::InvalidSpec:
        return ErrorCategory::Usage;
    default:
        return ErrorCategory::Data;
    }
}

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::Schema: return "schema";
    case ErrorCode::Duplicate: return "duplicate";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::MalformedValue: return "malformed-value";
    case ErrorCode::DegeneratePopulation: return "degenerate-population";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::RiskOverflow: return "risk-overflow";
    case ErrorCode::NonPositiveSlope: return "non-positive-slope";
    case ErrorCode::DegenerateOutcome: return "degenerate-outcome";
    case ErrorCode::Convergence: return "convergence";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::UndefinedCorrelation: return "undefined-correlation";
    case ErrorCode::SingularDesign: return "singular-design";
    case ErrorCode::UndefinedMeasure: return "undefined-measure";
    case ErrorCode::DegenerateTraining: return "degenerate-training";
    case ErrorCode::UnsupportedDesign: return "unsupported-design";
    case ErrorCode::UnsupportedK: return "unsupported-k";
    case ErrorCode::MissingValues: return "missing-values";
    case ErrorCode::Config: return "config";
    case ErrorCode::NotInFixture: return "not-in-fixture";
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::Io: return "io";
    }
    return "unknown";
}

int exit_code_for(ErrorCategory category) noexcept {
    switch (category) {
    case ErrorCategory::Usage: return 1;
    case ErrorCategory::Data: return 2;
    case ErrorCategory::Numerical: return 3;
    }
    return 2;
}

}  // namespace relthresh
