#include "dcpanel/error.hpp"

namespace dcp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::TauTooLarge: return "TauTooLarge";
    case ErrorCode::SampleTooShort: return "SampleTooShort";
    case ErrorCode::EmptyMonth: return "EmptyMonth";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::ZeroVolumeWithMove: return "ZeroVolumeWithMove";
    case ErrorCode::AllZeroCaps: return "AllZeroCaps";
    case ErrorCode::OrderConditionViolated: return "OrderConditionViolated";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::OverlappingGroups: return "OverlappingGroups";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::TooManyPredictors: return "TooManyPredictors";
    case ErrorCode::EmptySpectrum: return "EmptySpectrum";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::FactorCountZero: return "FactorCountZero";
    case ErrorCode::SingularWeighting: return "SingularWeighting";
    case ErrorCode::RankDeficientA: return "RankDeficientA";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::DegreesOfFreedomExhausted: return "DegreesOfFreedomExhausted";
    case ErrorCode::NoConvergence: return "NoConvergence";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::RankDeficient:
    case ErrorCode::FactorCountZero:
    case ErrorCode::SingularWeighting:
    case ErrorCode::RankDeficientA:
    case ErrorCode::RankDeficientDesign:
    case ErrorCode::DegreesOfFreedomExhausted:
    case ErrorCode::NoConvergence:
      return true;
    default:
      return false;
  }
}

}  // namespace dcp
