#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace relthresh {

/// Failure classes. Each maps onto one CLI exit code.
enum class ErrorCategory {
    Usage,      // bad flags, bad config, unsupported request
    Data,       // malformed or insufficient input data
    Numerical,  // the math itself failed (non-convergence, singularity)
};

enum class ErrorCode {
    // dataset_core
    Schema,
    Duplicate,
    EmptyInput,
    MalformedValue,
    DegeneratePopulation,
    // logit_threshold
    Domain,
    RiskOverflow,
    NonPositiveSlope,
    DegenerateOutcome,
    Convergence,
    // estimation
    InsufficientData,
    UndefinedCorrelation,
    SingularDesign,
    // evaluation
    UndefinedMeasure,
    DegenerateTraining,
    UnsupportedDesign,
    UnsupportedK,
    MissingValues,
    // orchestration
    Config,
    NotInFixture,
    InvalidSpec,
    Io,
};

ErrorCategory category_of(ErrorCode code) noexcept;
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_of(code_); }

private:
    ErrorCode code_;
};

/// CLI exit code for a failure category: 1 usage, 2 data, 3 numerical.
int exit_code_for(ErrorCategory category) noexcept;

}  // namespace relthresh
