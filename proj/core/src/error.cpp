#include "affordmap/error.hpp"

namespace affordmap {
namespace {

std::string compose(ErrorCode code, const std::string& message,
                    const std::string& stage) {
  std::string out;
  if (!stage.empty()) out += "[stage " + stage + "] ";
  out += std::string(to_string(code)) + ": " + message;
  return out;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kCorrupt: return "CorruptError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kMissingInput: return "MissingInputError";
    case ErrorCode::kShapeMismatch: return "ShapeMismatchError";
    case ErrorCode::kArgument: return "ArgumentError";
    case ErrorCode::kEmptyAttention: return "EmptyAttentionError";
    case ErrorCode::kDegenerateFeatures: return "DegenerateFeaturesError";
    case ErrorCode::kNoViablePart: return "NoViablePartError";
    case ErrorCode::kDegenerateMap: return "DegenerateMapError";
    case ErrorCode::kEmptyDataset: return "EmptyDatasetError";
    case ErrorCode::kEvaluationFailed: return "EvaluationFailedError";
  }
  return "Error";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFormat:
    case ErrorCode::kCorrupt:
    case ErrorCode::kMissingInput:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kArgument:
    case ErrorCode::kEmptyDataset:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message, std::string stage)
    : std::runtime_error(compose(code, message, stage)),
      code_(code),
      stage_(std::move(stage)),
      detail_(message) {}

Error Error::with_stage(std::string stage) const {
  return Error(code_, detail_, std::move(stage));
}

void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace affordmap
