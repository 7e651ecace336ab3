#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hardneg/corpus.hpp"
#include "hardneg/editgen/parse.hpp"

namespace hardneg {

/// Rule-based offline editor. Counting walks a fixed number cycle, Color a
/// fixed 16-color palette (both skipping penalized values), Existence flips
/// the leading yes/no and the first negation or auxiliary, everything else
/// swaps the first phrase found in the substitution tables. `seed` only picks
/// among table alternatives. Captioning edits the phrases named by
/// `triplets`. Throws PenaltyExhausted / NoEditableSpan.
EditResult mock_edit(TaskCategory category, std::string_view response, const std::vector<std::string>& penalty,
                     std::uint64_t seed, const std::vector<Triplet>* triplets = nullptr);

/// Rule-based stand-in for the triplet analyzer: color, number, size and
/// spatial phrases found in the response.
std::vector<Triplet> mock_extract_triplets(std::string_view response);

/// The completion text an editor following the prompt's output format would
/// produce for `r` (what the mock backend returns).
std::string format_completion(TaskCategory category, std::string_view chosen, const EditResult& r);
std::string format_triplet_completion(const std::vector<Triplet>& triplets);

}  // namespace hardneg
