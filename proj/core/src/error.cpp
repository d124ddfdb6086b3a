#include "gazegrid/error.hpp"

namespace gazegrid {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AllZeroMap: return "AllZeroMap";
    case ErrorCode::EmptyBinaryMap: return "EmptyBinaryMap";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InconsistentDims: return "InconsistentDims";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ConstantMap: return "ConstantMap";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::NegativeValue: return "NegativeValue";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace gazegrid
