#include "kmcf/error.hpp"

namespace kmcf {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::AxiomViolation: return "AxiomViolation";
    case ErrorKind::NonSquare: return "NonSquare";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::CapacityExceeded: return "CapacityExceeded";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotWFinite: return "NotWFinite";
    case ErrorKind::RootTableTooShallow: return "RootTableTooShallow";
    case ErrorKind::LengthBoundTooSmall: return "LengthBoundTooSmall";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::NotAUnit: return "NotAUnit";
    case ErrorKind::TruncationMismatch: return "TruncationMismatch";
    case ErrorKind::NotStabilized: return "NotStabilized";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::TBeyondRadius: return "TBeyondRadius";
    case ErrorKind::DenominatorNearZero: return "DenominatorNearZero";
    case ErrorKind::OutsideOmega: return "OutsideOmega";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, nlohmann::json detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      detail_(std::move(detail)) {}

nlohmann::json Error::to_json() const {
  return {{"error", std::string(to_string(kind_))}, {"message", what()}, {"detail", detail_}};
}

}  // namespace kmcf
