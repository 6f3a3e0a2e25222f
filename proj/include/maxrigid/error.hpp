#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maxrigid {

enum class ErrorCode {
  InvalidIntrinsics,
  InvalidObservation,
  NotVisible,
  InvalidLeg,
  InvalidSequence,
  InvalidNeighborCount,
  DisconnectedPoint,
  InvalidWeights,
  EmptyProblem,
  InvalidConfig,
  NumericalError,
  SolutionRejected,
  ScaleUndefined,
  AlignmentDegenerate,
  NoOverlap,
  GenerationFailed,
  ParseError,
  UnsupportedVersion,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidIntrinsics: return "InvalidIntrinsics";
    case ErrorCode::InvalidObservation: return "InvalidObservation";
    case ErrorCode::NotVisible: return "NotVisible";
    case ErrorCode::InvalidLeg: return "InvalidLeg";
    case ErrorCode::InvalidSequence: return "InvalidSequence";
    case ErrorCode::InvalidNeighborCount: return "InvalidNeighborCount";
    case ErrorCode::DisconnectedPoint: return "DisconnectedPoint";
    case ErrorCode::InvalidWeights: return "InvalidWeights";
    case ErrorCode::EmptyProblem: return "EmptyProblem";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NumericalError: return "NumericalError";
    case ErrorCode::SolutionRejected: return "SolutionRejected";
    case ErrorCode::ScaleUndefined: return "ScaleUndefined";
    case ErrorCode::AlignmentDegenerate: return "AlignmentDegenerate";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above so that
// callers (and the CLI exit-code mapping) can dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace maxrigid
