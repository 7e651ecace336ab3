#include "hardneg/error.hpp"

namespace hardneg {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::Io: return "IoError";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::Config: return "ConfigError";
    case Errc::Usage: return "UsageError";
    case Errc::PolarityUndetectable: return "PolarityUndetectable";
    case Errc::BudgetTooSmall: return "BudgetTooSmall";
    case Errc::MissingPenalty: return "MissingPenalty";
    case Errc::MissingTriplets: return "MissingTriplets";
    case Errc::UnparseableOutput: return "UnparseableOutput";
    case Errc::EmptyEdit: return "EmptyEdit";
    case Errc::PenaltyExhausted: return "PenaltyExhausted";
    case Errc::NoEditableSpan: return "NoEditableSpan";
    case Errc::Backend: return "BackendError";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::UnknownToken: return "UnknownToken";
    case Errc::VocabTooSmall: return "VocabTooSmall";
    case Errc::Divergence: return "Divergence";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::RaggedTable: return "RaggedTable";
    case Errc::MalformedGroup: return "MalformedGroup";
    case Errc::InfeasibleOrdering: return "InfeasibleOrdering";
    case Errc::NotEnoughPairs: return "NotEnoughPairs";
    case Errc::UnknownAnnotator: return "UnknownAnnotator";
    case Errc::UnknownSession: return "UnknownSession";
    case Errc::DuplicateLabel: return "DuplicateLabel";
    case Errc::UnknownTask: return "UnknownTask";
  }
  return "Error";
}

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code), line_(line) {}

}  // namespace hardneg
