#include "riskshare/error.hpp"

namespace riskshare {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingCell: return "MissingCell";
        case ErrorCode::NonNumericValue: return "NonNumericValue";
        case ErrorCode::DuplicateCell: return "DuplicateCell";
        case ErrorCode::NonContiguousYears: return "NonContiguousYears";
        case ErrorCode::NonPositiveValue: return "NonPositiveValue";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::RankDeficientTrend: return "RankDeficientTrend";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::TooFewClusters: return "TooFewClusters";
        case ErrorCode::UnbalancedForPcse: return "UnbalancedForPcse";
        case ErrorCode::UnknownVariable: return "UnknownVariable";
        case ErrorCode::CollinearAfterDummies: return "CollinearAfterDummies";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ZeroV: return "ZeroV";
        case ErrorCode::EmptyWindow: return "EmptyWindow";
        case ErrorCode::MisalignedDonors: return "MisalignedDonors";
        case ErrorCode::Misaligned: return "Misaligned";
        case ErrorCode::ZeroDenominator: return "ZeroDenominator";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::DegenerateSubsample: return "DegenerateSubsample";
        case ErrorCode::TooShortPre: return "TooShortPre";
        case ErrorCode::TooShortCell: return "TooShortCell";
        case ErrorCode::PoolTooSmall: return "PoolTooSmall";
        case ErrorCode::ZeroGamma: return "ZeroGamma";
        case ErrorCode::InfeasibleShares: return "InfeasibleShares";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

}  // namespace riskshare
