#pragma once

#include <stdexcept>
#include <string>

namespace bottleseg {

// Failure categories shared by every module. The CLI maps them onto exit codes.
enum class ErrorKind {
  InvalidPolygon,
  InconsistentRle,
  DimensionMismatch,
  Parse,
  Region,
  MissingMetadata,
  UnknownCategory,
  DuplicateImageId,
  ReferentialIntegrity,
  InvalidArgument,
  UnknownImage,
  ModeMismatch,
  UnknownModel,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bottleseg
