#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace affordmap {

enum class ErrorCode {
  kFormat,
  kCorrupt,
  kIo,
  kMissingInput,
  kShapeMismatch,
  kArgument,
  kEmptyAttention,
  kDegenerateFeatures,
  kNoViablePart,
  kDegenerateMap,
  kEmptyDataset,
  kEvaluationFailed,
};

std::string_view to_string(ErrorCode code);

/// True for errors caused by bad inputs or arguments rather than by a
/// failure while processing valid inputs. The CLI maps these to exit code 2.
bool is_validation_error(ErrorCode code);

/// Single exception type for the engine. The code identifies the failure
/// class; the stage (possibly empty) names the pipeline step that raised it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Copy of this error tagged with a pipeline stage.
  Error with_stage(std::string stage) const;

 private:
  ErrorCode code_;
  std::string stage_;
  std::string detail_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace affordmap
