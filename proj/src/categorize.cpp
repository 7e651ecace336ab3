#include "hardneg/categorize.hpp"

#include <algorithm>
#include <regex>

#include "hardneg/apportion.hpp"
#include "hardneg/rng.hpp"
#include "hardneg/text.hpp"

namespace hardneg {

std::string_view to_string(FilterReason r) {
  switch (r) {
    case FilterReason::Kept: return "kept";
    case FilterReason::TextOnly: return "text_only";
    case FilterReason::MultipleChoice: return "multiple_choice";
    case FilterReason::BoundingBox: return "bounding_box";
    case FilterReason::Ocr: return "ocr";
  }
  return "?";
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// "A." / "b)" style option markers; two distinct letters make it a menu.
bool looks_multiple_choice(std::string_view instruction) {
  const std::string low = text::to_lower(instruction);
  if (low.find("answer with the option") != std::string::npos) return true;
  std::set<char> letters;
  for (std::size_t i = 0; i + 1 < low.size(); ++i) {
    const char c = low[i];
    if (c < 'a' || c > 'f') continue;
    if (i > 0 && !is_space(low[i - 1])) continue;
    if (low[i + 1] != '.' && low[i + 1] != ')') continue;
    if (i + 2 < low.size() && !is_space(low[i + 2])) continue;
    letters.insert(c);
  }
  return letters.size() >= 2;
}

bool looks_like_box(std::string_view response) {
  static const std::regex box(
      R"(\[\s*-?\d+(\.\d+)?\s*,\s*-?\d+(\.\d+)?\s*,\s*-?\d+(\.\d+)?\s*,\s*-?\d+(\.\d+)?\s*\])");
  return std::regex_search(response.begin(), response.end(), box);
}

bool looks_like_ocr(std::string_view instruction) {
  const std::string low = text::to_lower(instruction);
  if (low.find("read the text") != std::string::npos) return true;
  if (low.find("what does the text say") != std::string::npos) return true;
  return text::contains_word(low, "ocr");
}

bool has_phrase(const std::vector<std::string>& words, std::size_t from, const std::vector<std::string>& phrase) {
  if (phrase.empty()) return false;
  for (std::size_t i = from; i + phrase.size() <= words.size(); ++i)
    if (std::equal(phrase.begin(), phrase.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) return true;
  return false;
}

std::vector<std::string> phrase_words(std::string_view s) { return text::words(s); }

}  // namespace

FilterVerdict filter_sample(const SftSample& s) {
  if (!s.image_ref || text::trim(*s.image_ref).empty()) return {false, FilterReason::TextOnly};
  const std::string instr = instruction_text(s);
  if (looks_multiple_choice(instr)) return {false, FilterReason::MultipleChoice};
  if (looks_like_box(s.response())) return {false, FilterReason::BoundingBox};
  if (looks_like_ocr(instr)) return {false, FilterReason::Ocr};
  return {};
}

KeywordRuleset KeywordRuleset::defaults() {
  KeywordRuleset r;
  r.keywords[TaskCategory::Color] = {"color", "colors"};
  r.keywords[TaskCategory::Size] = {"size", "sizes"};
  r.keywords[TaskCategory::Background] = {"environment", "time of", "day", "year", "weather", "lighting"};
  r.keywords[TaskCategory::Counting] = {"many", "count", "counts", "instance", "instances", "counting"};
  r.keywords[TaskCategory::Spatial] = {"where", "located", "placed", "positioned", "left",
                                       "right", "in front of", "down", "above", "below"};
  r.keywords[TaskCategory::GeneralReasoning] = {"could", "would", "might", "purpose", "reason", "based", "should"};
  r.keywords[TaskCategory::ReferentialVQA] = {"comparison", "difference", "closer", "nearer", "bigger"};
  r.keywords[TaskCategory::Captioning] = {"analyze", "describe", "write", "elaborate", "description", "snapshot"};
  r.existence_first_words = {"are", "is", "can", "do", "does", "would", "will"};
  return r;
}

void KeywordRuleset::extend(TaskCategory c, const std::vector<std::string>& words) {
  auto& target = c == TaskCategory::Existence ? existence_first_words : keywords[c];
  for (const auto& w : words) {
    std::string norm = text::normalize_ws(text::to_lower(w));
    if (norm.empty()) continue;
    if (std::find(target.begin(), target.end(), norm) == target.end()) target.push_back(norm);
  }
}

KeywordRuleset KeywordRuleset::with_overrides(const json& extra) {
  auto r = defaults();
  if (!extra.is_object()) throw Error(Errc::Config, "keywords override must be a JSON object");
  for (const auto& [key, list] : extra.items()) {
    auto c = parse_category(key);
    if (!c) throw Error(Errc::Config, "keywords override: unknown category \"" + key + "\"");
    if (*c == TaskCategory::Object) throw Error(Errc::Config, "keywords override: object is the fallback and takes no keywords");
    if (!list.is_array()) throw Error(Errc::Config, "keywords override: \"" + key + "\" must map to a list");
    std::vector<std::string> words;
    for (const auto& w : list) {
      if (!w.is_string()) throw Error(Errc::Config, "keywords override: entries must be strings");
      words.push_back(w.get<std::string>());
    }
    r.extend(*c, words);
  }
  return r;
}

CategoryAssignment assign_category(std::string_view instruction, const KeywordRuleset& rules) {
  CategoryAssignment a;
  const auto words = text::words(instruction);
  std::size_t from = 0;
  if (!words.empty()) {
    const auto& first = rules.existence_first_words;
    if (std::find(first.begin(), first.end(), words.front()) != first.end()) {
      a.tags.insert(TaskCategory::Existence);
      // the opening auxiliary belongs to the existence rule alone
      from = 1;
    }
  }
  for (const auto& [cat, list] : rules.keywords) {
    if (cat == TaskCategory::Existence || cat == TaskCategory::Object) continue;
    for (const auto& kw : list)
      if (has_phrase(words, from, phrase_words(kw))) {
        a.tags.insert(cat);
        break;
      }
  }
  if (a.tags.empty())
    a.final_category = TaskCategory::Object;
  else if (a.tags.size() == 1)
    a.final_category = *a.tags.begin();
  else
    a.final_category = TaskCategory::ReferentialVQA;
  return a;
}

TaggedSample tagged_from_json(const json& j) {
  TaggedSample t;
  t.sample = sft_from_json(j);
  if (!j.contains("category")) {
    t.assignment = assign_category(instruction_text(t.sample), KeywordRuleset::defaults());
    return t;
  }
  const auto& cat = j.at("category");
  if (!cat.is_string()) throw Error(Errc::MalformedLine, "\"category\" must be a string");
  auto c = parse_category(cat.get<std::string>());
  if (!c) throw Error(Errc::InvariantViolation, "unknown category \"" + cat.get<std::string>() + "\"");
  t.assignment.final_category = *c;
  if (auto it = j.find("tags"); it != j.end()) {
    if (!it->is_array()) throw Error(Errc::MalformedLine, "\"tags\" must be an array");
    for (const auto& tag : *it) {
      auto tc = tag.is_string() ? parse_category(tag.get<std::string>()) : std::nullopt;
      if (!tc) throw Error(Errc::InvariantViolation, "unknown tag " + tag.dump());
      t.assignment.tags.insert(*tc);
    }
  }
  return t;
}

json to_json(const TaggedSample& t) {
  json j = to_json(t.sample);
  j["category"] = to_string(t.assignment.final_category);
  json tags = json::array();
  for (auto c : t.assignment.tags) tags.push_back(to_string(c));
  j["tags"] = std::move(tags);
  return j;
}

std::vector<TaggedSample> load_tagged(const std::filesystem::path& path) {
  return load_strict<TaggedSample>(path, &tagged_from_json);
}

std::vector<TaggedSample> balance_existence(const std::vector<TaggedSample>& samples, std::uint64_t seed) {
  std::vector<std::size_t> yes, no;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].category() != TaskCategory::Existence) continue;
    auto pol = text::leading_polarity(samples[i].sample.response());
    if (!pol) throw Error(Errc::PolarityUndetectable, "sample " + samples[i].sample.id + ": response starts with neither yes nor no");
    (*pol == text::Polarity::Yes ? yes : no).push_back(i);
  }
  std::vector<bool> drop(samples.size(), false);
  auto& major = yes.size() > no.size() ? yes : no;
  const std::size_t keep = std::min(yes.size(), no.size());
  Rng rng(seed);
  rng.shuffle(major);
  for (std::size_t k = keep; k < major.size(); ++k) drop[major[k]] = true;

  std::vector<TaggedSample> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (!drop[i]) out.push_back(samples[i]);
  return out;
}

std::array<std::size_t, 10> stratified_quotas(const std::array<std::size_t, 10>& available,
                                              std::size_t budget, const CategoryWeights& weights) {
  std::size_t active = 0;
  for (auto n : available) active += n > 0;
  if (budget < active)
    throw Error(Errc::BudgetTooSmall, "budget " + std::to_string(budget) + " is below the " + std::to_string(active) +
                                          " non-empty categories");
  std::array<std::size_t, 10> quota{};
  std::vector<double> w(weights.begin(), weights.end());
  std::vector<std::size_t> caps(10);
  for (std::size_t c = 0; c < 10; ++c) {
    quota[c] = available[c] > 0 ? 1 : 0;
    caps[c] = available[c] - quota[c];
  }
  auto extra = apportion(budget - active, w, caps);
  for (std::size_t c = 0; c < 10; ++c) quota[c] += extra[c];
  return quota;
}

std::vector<TaggedSample> stratified_subsample(const std::vector<TaggedSample>& samples, std::size_t budget,
                                               std::uint64_t seed, const CategoryWeights& weights) {
  std::array<std::vector<std::size_t>, 10> by_cat;
  for (std::size_t i = 0; i < samples.size(); ++i)
    by_cat[static_cast<std::size_t>(samples[i].category())].push_back(i);
  std::array<std::size_t, 10> available{};
  for (std::size_t c = 0; c < 10; ++c) available[c] = by_cat[c].size();
  const auto quota = stratified_quotas(available, budget, weights);

  std::vector<bool> take(samples.size(), false);
  for (std::size_t c = 0; c < 10; ++c) {
    auto idx = by_cat[c];
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(idx);
    for (std::size_t k = 0; k < quota[c]; ++k) take[idx[k]] = true;
  }
  std::vector<TaggedSample> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (take[i]) out.push_back(samples[i]);
  return out;
}

}  // namespace hardneg
