#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nlsbif {

enum class Errc {
  InvalidGrid,
  InvalidArgument,
  InvalidOrder,
  UnsupportedPotential,
  NoBoundState,
  EigenFailure,
  NonFiniteInput,
  RhsNotOrthogonal,
  SolveFailure,
  MaxIterExceeded,
  DivergedToZero,
  SingularJacobian,
  WrongSideOfE0,
  NonpositiveShiftedE,
  StepUnderflow,
  StateCollapsed,
  MissingSpectrum,
  BracketLost,
  InconsistentEstimates,
  DegenerateLambdaPrime,
  ZeroQ,
  FellBackToSymmetric,
  WindowTooNarrow,
  UnderResolved,
  NotCriticalPoint,
  ConfigError,
  IoError,
  UnverifiedState,
};

constexpr std::string_view to_string(Errc c) {
  switch (c) {
    case Errc::InvalidGrid: return "InvalidGrid";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidOrder: return "InvalidOrder";
    case Errc::UnsupportedPotential: return "UnsupportedPotential";
    case Errc::NoBoundState: return "NoBoundState";
    case Errc::EigenFailure: return "EigenFailure";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::RhsNotOrthogonal: return "RhsNotOrthogonal";
    case Errc::SolveFailure: return "SolveFailure";
    case Errc::MaxIterExceeded: return "MaxIterExceeded";
    case Errc::DivergedToZero: return "DivergedToZero";
    case Errc::SingularJacobian: return "SingularJacobian";
    case Errc::WrongSideOfE0: return "WrongSideOfE0";
    case Errc::NonpositiveShiftedE: return "NonpositiveShiftedE";
    case Errc::StepUnderflow: return "StepUnderflow";
    case Errc::StateCollapsed: return "StateCollapsed";
    case Errc::MissingSpectrum: return "MissingSpectrum";
    case Errc::BracketLost: return "BracketLost";
    case Errc::InconsistentEstimates: return "InconsistentEstimates";
    case Errc::DegenerateLambdaPrime: return "DegenerateLambdaPrime";
    case Errc::ZeroQ: return "ZeroQ";
    case Errc::FellBackToSymmetric: return "FellBackToSymmetric";
    case Errc::WindowTooNarrow: return "WindowTooNarrow";
    case Errc::UnderResolved: return "UnderResolved";
    case Errc::NotCriticalPoint: return "NotCriticalPoint";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
    case Errc::UnverifiedState: return "UnverifiedState";
  }
  return "Unknown";
}

/// Every failure in the library surfaces as this exception; `code()` tells
/// callers which recovery path (if any) applies.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace nlsbif
