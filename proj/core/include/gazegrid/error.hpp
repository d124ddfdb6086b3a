#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gazegrid {

enum class ErrorCode {
  InvalidArgument,
  AllZeroMap,
  EmptyBinaryMap,
  DimensionMismatch,
  SpecMismatch,
  ShapeMismatch,
  EmptyDataset,
  InconsistentDims,
  EmptyIntersection,
  EmptyInput,
  ConstantMap,
  LengthMismatch,
  DegenerateLabels,
  InfeasibleSpec,
  MalformedHeader,
  TruncatedPayload,
  NegativeValue,
  ParseError,
  InvalidBox,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code. The CLI prints
/// `error: <Code>: <message>` for any of these.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gazegrid
