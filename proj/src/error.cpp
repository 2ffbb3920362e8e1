#include "plard/error.hpp"

namespace plard {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TruncatedRecord: return "TruncatedRecord";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::WrongArity: return "WrongArity";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularHomography: return "SingularHomography";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "IO";
    case ErrorCode::Numerical: return "Numerical";
  }
  return "Unknown";
}

}  // namespace plard
