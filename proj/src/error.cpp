#include "qot/error.hpp"

namespace qot {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NearDependentStates: return "NearDependentStates";
    case ErrorCode::BasisMismatch: return "BasisMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InfeasibleMasses: return "InfeasibleMasses";
    case ErrorCode::NonzeroMomentum: return "NonzeroMomentum";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::InfeasibleAnsatz: return "InfeasibleAnsatz";
    case ErrorCode::PatternViolation: return "PatternViolation";
    case ErrorCode::SingularFrame: return "SingularFrame";
  }
  return "Unknown";
}

}  // namespace qot
