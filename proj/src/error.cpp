#include "a11y/error.hpp"

namespace a11y {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MissingFile: return "MissingFile";
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::UnknownEnvironment: return "UnknownEnvironment";
    case Errc::UnsupportedSchema: return "UnsupportedSchema";
    case Errc::EmptyManifest: return "EmptyManifest";
    case Errc::MissingGroundTruth: return "MissingGroundTruth";
    case Errc::IoError: return "IoError";
    case Errc::DuplicateRunId: return "DuplicateRunId";
    case Errc::DumperNotFound: return "DumperNotFound";
    case Errc::DumperFailed: return "DumperFailed";
    case Errc::EmptyVideo: return "EmptyVideo";
    case Errc::TooFewFrames: return "TooFewFrames";
    case Errc::WindowTooLarge: return "WindowTooLarge";
    case Errc::EvenWindow: return "EvenWindow";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::MissingContext: return "MissingContext";
    case Errc::EmptyGuidelines: return "EmptyGuidelines";
    case Errc::EmptyFile: return "EmptyFile";
    case Errc::ConnectError: return "ConnectError";
    case Errc::Timeout: return "Timeout";
    case Errc::BackendError: return "BackendError";
    case Errc::StreamAborted: return "StreamAborted";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::EmptyReference: return "EmptyReference";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::CorpusTooSmall: return "CorpusTooSmall";
    case Errc::StatsMismatch: return "StatsMismatch";
    case Errc::TemplateMissingPlaceholder: return "TemplateMissingPlaceholder";
    case Errc::NoJsonFound: return "NoJsonFound";
    case Errc::MissingKey: return "MissingKey";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NonNumeric: return "NonNumeric";
    case Errc::JudgeUnparseable: return "JudgeUnparseable";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::BackendLaunchFailed: return "BackendLaunchFailed";
    case Errc::InsufficientTokens: return "InsufficientTokens";
    case Errc::ProcessNotObservable: return "ProcessNotObservable";
    case Errc::InvalidTrace: return "InvalidTrace";
    case Errc::NotEnoughGroups: return "NotEnoughGroups";
    case Errc::NoScores: return "NoScores";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::MissingStageInput: return "MissingStageInput";
  }
  return "Unknown";
}

ErrorClass error_class(Errc code) {
  switch (code) {
    case Errc::ConfigInvalid:
    case Errc::InvalidArgument:
    case Errc::TemplateMissingPlaceholder:
      return ErrorClass::Config;
    case Errc::MissingStageInput:
      return ErrorClass::MissingStageInput;
    case Errc::ConnectError:
    case Errc::Timeout:
    case Errc::BackendError:
    case Errc::StreamAborted:
      return ErrorClass::Backend;
    case Errc::DumperNotFound:
    case Errc::DumperFailed:
    case Errc::EmptyVideo:
    case Errc::TooFewFrames:
    case Errc::WindowTooLarge:
    case Errc::EvenWindow:
    case Errc::EmptySequence:
    case Errc::UnsupportedFormat:
      return ErrorClass::Media;
    case Errc::NoJsonFound:
    case Errc::MissingKey:
    case Errc::OutOfRange:
    case Errc::NonNumeric:
    case Errc::JudgeUnparseable:
    case Errc::EmptyGroup:
      return ErrorClass::Judge;
    case Errc::BackendLaunchFailed:
    case Errc::InsufficientTokens:
    case Errc::ProcessNotObservable:
    case Errc::InvalidTrace:
    case Errc::NotEnoughGroups:
      return ErrorClass::Perf;
    case Errc::IoError:
    case Errc::DuplicateRunId:
      return ErrorClass::Io;
    default:
      return ErrorClass::Data;
  }
}

}  // namespace a11y
