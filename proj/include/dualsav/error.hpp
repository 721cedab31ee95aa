#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dualsav {

enum class ErrorKind {
  InvalidCurve,
  DegenerateEdge,
  FoldedVertex,
  DegenerateUpdate,
  NotPositiveDefinite,
  SingularBorderedSystem,
  ZeroGeometricSav,
  SingularJacobian,
  NewtonDivergence,
  DissipationViolation,
  InvalidConfig,
  InvalidOverride,
  UnknownCurveKind,
  UnknownPreset,
  MismatchedSweep,
  InvalidRunSpec,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidCurve: return "InvalidCurve";
    case ErrorKind::DegenerateEdge: return "DegenerateEdge";
    case ErrorKind::FoldedVertex: return "FoldedVertex";
    case ErrorKind::DegenerateUpdate: return "DegenerateUpdate";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::SingularBorderedSystem: return "SingularBorderedSystem";
    case ErrorKind::ZeroGeometricSav: return "ZeroGeometricSav";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::NewtonDivergence: return "NewtonDivergence";
    case ErrorKind::DissipationViolation: return "DissipationViolation";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidOverride: return "InvalidOverride";
    case ErrorKind::UnknownCurveKind: return "UnknownCurveKind";
    case ErrorKind::UnknownPreset: return "UnknownPreset";
    case ErrorKind::MismatchedSweep: return "MismatchedSweep";
    case ErrorKind::InvalidRunSpec: return "InvalidRunSpec";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dualsav
