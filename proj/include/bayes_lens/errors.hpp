#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bayes_lens {

enum class ErrorCode {
  MalformedCsv,
  NonFiniteValue,
  ChainMismatch,
  DuplicateObsId,
  UnknownObsId,
  UncoveredObsId,
  DegenerateSample,
  OverflowGuard,
  ZeroTrace,
  ZeroPerturbation,
  CountOutOfRange,
  ProbabilityOutOfRange,
  InvalidParameter,
  NoReplicates,
  SingleDraw,
  FamilyMismatch,
  ZeroLeverage,
  ZeroHatValue,
  RankOutOfRange,
  SingularSystem,
  NonFiniteInput,
  BadSeed,
  IndexOutOfRange,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ChainMismatch: return "ChainMismatch";
    case ErrorCode::DuplicateObsId: return "DuplicateObsId";
    case ErrorCode::UnknownObsId: return "UnknownObsId";
    case ErrorCode::UncoveredObsId: return "UncoveredObsId";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::OverflowGuard: return "OverflowGuard";
    case ErrorCode::ZeroTrace: return "ZeroTrace";
    case ErrorCode::ZeroPerturbation: return "ZeroPerturbation";
    case ErrorCode::CountOutOfRange: return "CountOutOfRange";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::NoReplicates: return "NoReplicates";
    case ErrorCode::SingleDraw: return "SingleDraw";
    case ErrorCode::FamilyMismatch: return "FamilyMismatch";
    case ErrorCode::ZeroLeverage: return "ZeroLeverage";
    case ErrorCode::ZeroHatValue: return "ZeroHatValue";
    case ErrorCode::RankOutOfRange: return "RankOutOfRange";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::BadSeed: return "BadSeed";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// that front ends can report it in machine-readable form.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace bayes_lens
