#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hardneg/corpus.hpp"

namespace hardneg {

enum class FilterReason { Kept, TextOnly, MultipleChoice, BoundingBox, Ocr };

std::string_view to_string(FilterReason r);

struct FilterVerdict {
  bool keep = true;
  FilterReason reason = FilterReason::Kept;
};

/// Drops samples that cannot yield a useful hard negative: no image,
/// multiple-choice prompts, box-coordinate answers and OCR requests.
FilterVerdict filter_sample(const SftSample& s);

struct KeywordRuleset {
  // Keywords are lowercase; multi-word entries match consecutive words.
  std::map<TaskCategory, std::vector<std::string>> keywords;
  std::vector<std::string> existence_first_words;

  static KeywordRuleset defaults();

  /// Defaults extended by a {"category": ["extra", ...]} override object.
  /// "existence" entries extend the first-word list.
  static KeywordRuleset with_overrides(const json& extra);

  void extend(TaskCategory c, const std::vector<std::string>& words);
};

struct CategoryAssignment {
  std::set<TaskCategory> tags;
  TaskCategory final_category = TaskCategory::Object;

  bool operator==(const CategoryAssignment&) const = default;
};

CategoryAssignment assign_category(std::string_view instruction, const KeywordRuleset& rules);

struct TaggedSample {
  SftSample sample;
  CategoryAssignment assignment;

  TaskCategory category() const { return assignment.final_category; }
  bool operator==(const TaggedSample&) const = default;
};

/// Tagged JSONL: the SFT record plus "category" and "tags".
TaggedSample tagged_from_json(const json& j);
json to_json(const TaggedSample& t);
std::vector<TaggedSample> load_tagged(const std::filesystem::path& path);

/// Keeps min(#yes, #no) Existence samples of each polarity; surplus of the
/// majority side is dropped by seeded choice. Other categories pass through.
/// Output preserves input order.
std::vector<TaggedSample> balance_existence(const std::vector<TaggedSample>& samples, std::uint64_t seed);

using CategoryWeights = std::array<double, 10>;

inline constexpr CategoryWeights kUniformWeights = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1};

/// Per-category quotas: one slot per non-empty category first, the rest by
/// largest remainder over `weights`, capped at availability with the
/// shortfall re-apportioned over categories that still have room.
std::array<std::size_t, 10> stratified_quotas(const std::array<std::size_t, 10>& available,
                                              std::size_t budget, const CategoryWeights& weights);

std::vector<TaggedSample> stratified_subsample(const std::vector<TaggedSample>& samples,
                                               std::size_t budget, std::uint64_t seed,
                                               const CategoryWeights& weights = kUniformWeights);

}  // namespace hardneg
