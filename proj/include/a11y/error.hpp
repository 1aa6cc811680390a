#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace a11y {

// Every failure the harness reports is an a11y::Error carrying one of these
// codes. The CLI maps codes onto exit statuses via error_class().
enum class Errc {
  // manifest
  MissingFile,
  ParseError,
  DuplicateId,
  UnknownEnvironment,
  UnsupportedSchema,
  EmptyManifest,
  MissingGroundTruth,
  IoError,
  DuplicateRunId,
  // keyframes
  DumperNotFound,
  DumperFailed,
  EmptyVideo,
  TooFewFrames,
  WindowTooLarge,
  EvenWindow,
  EmptySequence,
  InvalidArgument,
  // prompts
  MissingContext,
  EmptyGuidelines,
  EmptyFile,
  // inference
  ConnectError,
  Timeout,
  BackendError,
  StreamAborted,
  UnsupportedFormat,
  // nlpmetrics
  EmptyReference,
  EmptyInput,
  CorpusTooSmall,
  StatsMismatch,
  // judge
  TemplateMissingPlaceholder,
  NoJsonFound,
  MissingKey,
  OutOfRange,
  NonNumeric,
  JudgeUnparseable,
  EmptyGroup,
  // perf
  BackendLaunchFailed,
  InsufficientTokens,
  ProcessNotObservable,
  InvalidTrace,
  NotEnoughGroups,
  // report
  NoScores,
  // cli
  ConfigInvalid,
  MissingStageInput,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Coarse grouping used for process exit codes.
enum class ErrorClass {
  Config = 2,
  MissingStageInput = 3,
  Data = 4,
  Backend = 5,
  Media = 6,
  Judge = 7,
  Perf = 8,
  Io = 9,
};

ErrorClass error_class(Errc code);

}  // namespace a11y
