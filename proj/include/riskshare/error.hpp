#pragma once

#include <stdexcept>
#include <string>

namespace riskshare {

/// Machine-checkable failure categories. Every library error carries one of
/// these codes plus a human-readable message naming the offending cell,
/// column, or unit.
enum class ErrorCode {
    // panel
    MissingCell,
    NonNumericValue,
    DuplicateCell,
    NonContiguousYears,
    NonPositiveValue,
    TooShort,
    RankDeficientTrend,
    // regress
    RankDeficient,
    TooFewClusters,
    UnbalancedForPcse,
    UnknownVariable,
    CollinearAfterDummies,
    // scm
    DimensionMismatch,
    ZeroV,
    EmptyWindow,
    MisalignedDonors,
    Misaligned,
    ZeroDenominator,
    // channels
    GridMismatch,
    DegenerateSubsample,
    TooShortPre,
    TooShortCell,
    // inference
    PoolTooSmall,
    // biascorr
    ZeroGamma,
    // dgp
    InfeasibleShares,
    // cli / io
    ConfigError,
    IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace riskshare
