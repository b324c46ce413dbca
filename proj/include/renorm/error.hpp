#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace renorm {

enum class ErrorCode {
  DuplicatePoint,
  PointOutsideImpurity,
  RadiusOutOfRange,
  BoundaryDegenerate,
  TruncationOverflow,
  MismatchedTruncation,
  ZeroDegree,
  DomainError,
  WrongRegime,
  NoConvergence,
  ResolutionTooCoarse,
  HoleOverlap,
  SolverDivergence,
  LoopCrossesHole,
  ParseError,
  ValidationError,
  ComputeError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can emit a machine-readable record.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace renorm
