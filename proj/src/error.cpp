#include "vizrank/error.hpp"

namespace vizrank {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedInput: return "MalformedInput";
    case Errc::TooFewColumns: return "TooFewColumns";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::WrongArity: return "WrongArity";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::EmptyTrainingSet: return "EmptyTrainingSet";
    case Errc::EmptyEnsemble: return "EmptyEnsemble";
    case Errc::IoFailure: return "IoFailure";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::CorruptBundle: return "CorruptBundle";
    case Errc::KOutOfRange: return "KOutOfRange";
    case Errc::MissingModel: return "MissingModel";
    case Errc::UnknownTask: return "UnknownTask";
    case Errc::KeyMismatch: return "KeyMismatch";
    case Errc::InvalidJudgment: return "InvalidJudgment";
    case Errc::DuplicateJudgment: return "DuplicateJudgment";
  }
  return "Unknown";
}

int exit_code(Errc code) noexcept { return 10 + static_cast<int>(code); }

}  // namespace vizrank
