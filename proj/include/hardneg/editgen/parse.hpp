#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hardneg/corpus.hpp"

namespace hardneg {

struct EditResult {
  std::string rejected;
  std::optional<std::string> revised_chosen;  // Existence only
  std::vector<std::string> new_values;
  std::string raw;
};

/// Pulls the labeled fields out of an editor completion. Labels are matched
/// at line starts, case-insensitively, tolerating markdown emphasis and
/// quotes around them; a field runs until the next labeled line.
/// Throws UnparseableOutput naming the missing label, or EmptyEdit.
EditResult parse_edit_response(TaskCategory category, std::string_view raw);

struct TripletParse {
  std::vector<Triplet> triplets;
  std::size_t unknown_dimension = 0;
};

/// Parses `Triplet List: [("el", "dim", "phrase"), ...]`. Entries whose
/// dimension is outside the ten-element set are counted and skipped.
TripletParse parse_triplets(std::string_view raw);

/// Splits `[a, 'b', "c"]` or `a, b` into lowercased trimmed entries.
std::vector<std::string> parse_value_list(std::string_view s);

}  // namespace hardneg
