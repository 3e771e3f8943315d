#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vizrank {

// Every failure the library reports carries one of these codes. The CLI maps
// each to a distinct exit status (see exit_code()).
enum class Errc {
  MalformedInput,
  TooFewColumns,
  TooFewRows,
  EmptyInput,
  EmptySequence,
  LengthMismatch,
  NotNormalized,
  WrongArity,
  InvalidConfig,
  ShapeMismatch,
  EmptyTrainingSet,
  EmptyEnsemble,
  IoFailure,
  VersionMismatch,
  CorruptBundle,
  KOutOfRange,
  MissingModel,
  UnknownTask,
  KeyMismatch,
  InvalidJudgment,
  DuplicateJudgment,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Process exit status for an error: 10 + the enumerator's position.
int exit_code(Errc code) noexcept;

}  // namespace vizrank
