#pragma once

#include <string>
#include <vector>

#include "hardneg/corpus.hpp"
#include "hardneg/editgen/penalty.hpp"

namespace hardneg {

/// Editing prompt for one sample. `penalty` is required for Color, Counting
/// and Captioning (MissingPenalty); `triplets` for Captioning
/// (MissingTriplets). Captioning's penalty steers triplet selection and is
/// not rendered.
std::string build_prompt(TaskCategory category, std::string_view instruction, std::string_view response,
                         const PenaltyList* penalty, const std::vector<Triplet>* triplets);

/// Captioning stage 1: ask for the (element, dimension, phrase) list.
std::string build_triplet_prompt(std::string_view instruction, std::string_view response);

/// `[a, b]`, `[]` when empty.
std::string render_list(const std::vector<std::string>& values);

/// `[("el", "dimension", "phrase"), ...]`
std::string render_triplets(const std::vector<Triplet>& triplets);

}  // namespace hardneg
