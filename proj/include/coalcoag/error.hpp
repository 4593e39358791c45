#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace coalcoag {

enum class ErrorKind {
  NonPrimitiveMatrix,
  InconsistentCounts,
  NonPositiveRate,
  InvalidParameter,
  Absorbed,
  TooFewBlocks,
  NonPositiveLambda,
  StepTooLarge,
  ZeroBeta,
  RepresentationInvalid,
  InsufficientSamples,
  ExplosionGuard,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPrimitiveMatrix: return "NonPrimitiveMatrix";
    case ErrorKind::InconsistentCounts: return "InconsistentCounts";
    case ErrorKind::NonPositiveRate: return "NonPositiveRate";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::Absorbed: return "Absorbed";
    case ErrorKind::TooFewBlocks: return "TooFewBlocks";
    case ErrorKind::NonPositiveLambda: return "NonPositiveLambda";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::ZeroBeta: return "ZeroBeta";
    case ErrorKind::RepresentationInvalid: return "RepresentationInvalid";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::ExplosionGuard: return "ExplosionGuard";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace coalcoag
