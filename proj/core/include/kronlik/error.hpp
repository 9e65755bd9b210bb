#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kronlik {

enum class ErrorCode {
  DimensionMismatch,
  InsufficientData,
  NotPositiveDefinite,
  ExistenceRuledOut,
  ExistenceNotGuaranteed,
  DegenerateUpdate,
  MaxIterations,
  WrongShape,
  SingularDifference,
  ZeroResidualCell,
  DegenerateDenominator,
  PoleOnGrid,
  RootNotBracketed,
  NotInInterval,
  NotNonUnique,
  InvalidArgument,
  Parse,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so that
// front ends can map outcomes to exit codes without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace kronlik
