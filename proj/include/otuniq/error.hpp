#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace otuniq {

enum class ErrorCode {
  InvalidMeasure,
  DimensionMismatch,
  InvalidCost,
  AllInfinite,
  InfeasiblePair,
  Unbalanced,
  InfeasibleOptimum,
  BadEpsilon,
  ZeroMassComponent,
  MassLoss,
  TooManyComponents,
  InconsistentCycle,
  NotSymmetric,
  NotSelfCoupled,
  WrongComponentCount,
  ProfileNotMonotone,
  ScheduleTooShort,
  NotAGrid,
  ExactUnsupported,
  MissingEpsilon,
  OracleLimit,
  Parse,
  Internal,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidMeasure: return "invalid_measure";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::InvalidCost: return "invalid_cost";
    case ErrorCode::AllInfinite: return "all_infinite";
    case ErrorCode::InfeasiblePair: return "infeasible_pair";
    case ErrorCode::Unbalanced: return "unbalanced";
    case ErrorCode::InfeasibleOptimum: return "infeasible_optimum";
    case ErrorCode::BadEpsilon: return "bad_epsilon";
    case ErrorCode::ZeroMassComponent: return "zero_mass_component";
    case ErrorCode::MassLoss: return "mass_loss";
    case ErrorCode::TooManyComponents: return "too_many_components";
    case ErrorCode::InconsistentCycle: return "inconsistent_cycle";
    case ErrorCode::NotSymmetric: return "not_symmetric";
    case ErrorCode::NotSelfCoupled: return "not_self_coupled";
    case ErrorCode::WrongComponentCount: return "wrong_component_count";
    case ErrorCode::ProfileNotMonotone: return "profile_not_monotone";
    case ErrorCode::ScheduleTooShort: return "schedule_too_short";
    case ErrorCode::NotAGrid: return "not_a_grid";
    case ErrorCode::ExactUnsupported: return "exact_unsupported";
    case ErrorCode::MissingEpsilon: return "missing_epsilon";
    case ErrorCode::OracleLimit: return "oracle_limit";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace otuniq
