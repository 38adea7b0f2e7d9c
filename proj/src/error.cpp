#include "bottleseg/error.hpp"

namespace bottleseg {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidPolygon: return "invalid-polygon";
    case ErrorKind::InconsistentRle: return "inconsistent-rle";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Region: return "region";
    case ErrorKind::MissingMetadata: return "missing-metadata";
    case ErrorKind::UnknownCategory: return "unknown-category";
    case ErrorKind::DuplicateImageId: return "duplicate-image-id";
    case ErrorKind::ReferentialIntegrity: return "referential-integrity";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::UnknownImage: return "unknown-image";
    case ErrorKind::ModeMismatch: return "mode-mismatch";
    case ErrorKind::UnknownModel: return "unknown-model";
  }
  return "unknown";
}

}  // namespace bottleseg
