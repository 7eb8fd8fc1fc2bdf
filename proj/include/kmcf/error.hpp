#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace kmcf {

enum class ErrorKind {
  AxiomViolation,
  NonSquare,
  IndexOutOfRange,
  CapacityExceeded,
  DimensionMismatch,
  NotWFinite,
  RootTableTooShallow,
  LengthBoundTooSmall,
  InsufficientData,
  NotAUnit,
  TruncationMismatch,
  NotStabilized,
  DomainError,
  TBeyondRadius,
  DenominatorNearZero,
  OutsideOmega,
  ParseError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library. `detail()` carries the structured
/// payload (failing indices, exponents, bounds) that the CLI forwards as JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, nlohmann::json detail = nlohmann::json::object());

  ErrorKind kind() const noexcept { return kind_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

  /// {"error": <kind>, "message": ..., "detail": {...}}
  nlohmann::json to_json() const;

 private:
  ErrorKind kind_;
  nlohmann::json detail_;
};

}  // namespace kmcf
