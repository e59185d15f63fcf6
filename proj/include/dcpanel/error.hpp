#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dcp {

enum class ErrorCode {
  // input validation
  DimensionMismatch,
  InvalidConfig,
  InvalidInput,
  TauTooLarge,
  SampleTooShort,
  EmptyMonth,
  NonPositivePrice,
  ZeroVolumeWithMove,
  AllZeroCaps,
  OrderConditionViolated,
  EmptyPool,
  EmptyGrid,
  GroupTooSmall,
  OverlappingGroups,
  IndexOutOfRange,
  TooManyPredictors,
  EmptySpectrum,
  KTooLarge,
  NotSymmetric,
  // numerical failures
  RankDeficient,
  FactorCountZero,
  SingularWeighting,
  RankDeficientA,
  RankDeficientDesign,
  DegreesOfFreedomExhausted,
  NoConvergence,
};

std::string_view to_string(ErrorCode code);

/// True for codes that signal a numerical failure rather than bad input.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace dcp
