#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hardneg {

enum class Errc {
  Io,
  MalformedLine,
  InvariantViolation,
  Config,
  Usage,
  // categorize
  PolarityUndetectable,
  BudgetTooSmall,
  // editgen
  MissingPenalty,
  MissingTriplets,
  UnparseableOutput,
  EmptyEdit,
  PenaltyExhausted,
  NoEditableSpan,
  Backend,
  // metrics
  EmptyDataset,
  // dpo
  UnknownToken,
  VocabTooSmall,
  Divergence,
  // stats
  LengthMismatch,
  EmptyInput,
  RaggedTable,
  MalformedGroup,
  // review
  InfeasibleOrdering,
  NotEnoughPairs,
  UnknownAnnotator,
  UnknownSession,
  DuplicateLabel,
  UnknownTask,
};

std::string_view errc_name(Errc code);

/// Single exception type for the library. The code identifies the contract
/// that was violated; `line()` is set for errors tied to an input line.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::optional<std::size_t> line = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  Errc code_;
  std::optional<std::size_t> line_;
};

}  // namespace hardneg
