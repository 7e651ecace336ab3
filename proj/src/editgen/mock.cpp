#include "hardneg/editgen/mock.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "hardneg/editgen/lexicon.hpp"
#include "hardneg/editgen/penalty.hpp"
#include "hardneg/editgen/prompts.hpp"
#include "hardneg/rng.hpp"
#include "hardneg/text.hpp"

namespace hardneg {

namespace {

struct Span {
  std::size_t b, e;
  std::string low;
};

struct Replacement {
  std::size_t b, e;
  std::string text;
};

bool word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::vector<Span> scan(std::string_view s) {
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!word_byte(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && (word_byte(static_cast<unsigned char>(s[j])) ||
                            (s[j] == '\'' && j + 1 < s.size() && word_byte(static_cast<unsigned char>(s[j + 1])))))
      ++j;
    out.push_back({i, j, text::to_lower(s.substr(i, j - i))});
    i = j;
  }
  return out;
}

std::string match_case(std::string_view orig, std::string repl) {
  if (orig.empty() || repl.empty()) return repl;
  const bool all_upper = orig.size() > 1 && std::all_of(orig.begin(), orig.end(), [](unsigned char c) {
                           return !std::isalpha(c) || std::isupper(c);
                         });
  if (all_upper) {
    for (auto& c : repl) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  } else if (std::isupper(static_cast<unsigned char>(orig[0]))) {
    repl[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(repl[0])));
  }
  return repl;
}

std::string apply(std::string_view s, std::vector<Replacement> reps) {
  std::sort(reps.begin(), reps.end(), [](const auto& a, const auto& b) { return a.b < b.b; });
  std::string out;
  std::size_t pos = 0;
  for (const auto& r : reps) {
    out.append(s.substr(pos, r.b - pos));
    out += r.text;
    pos = r.e;
  }
  out.append(s.substr(pos));
  return out;
}

bool overlaps(const std::vector<Replacement>& reps, std::size_t b, std::size_t e) {
  return std::any_of(reps.begin(), reps.end(), [&](const auto& r) { return b < r.e && r.b < e; });
}

bool in_penalty(const std::vector<std::string>& penalty, const std::string& v, bool numeric) {
  for (const auto& p : penalty) {
    if (p == v) return true;
    if (numeric) {
      auto a = lexicon::number_value(p);
      auto b = lexicon::number_value(v);
      if (a && b && *a == *b) return true;
    }
  }
  return false;
}

struct Editor {
  std::string_view text;
  std::vector<Span> spans;
  std::vector<std::string> penalty;
  Rng rng;
  std::vector<Replacement> reps;
  std::vector<std::string> new_values;
  // shared across triplets so one original always maps to one replacement
  std::map<std::string, std::string> color_map;
  std::map<int, int> number_map;

  Editor(std::string_view t, const std::vector<std::string>& pen, std::uint64_t seed)
      : text(t), spans(scan(t)), rng(seed) {
    for (const auto& p : pen) penalty.push_back(normalize_value(p));
  }

  bool pronoun_one(std::size_t i) const {
    if (spans[i].low != "one") return false;
    static const std::set<std::string> before = {"the", "this", "that", "each", "any", "every", "other", "which", "no", "another", "someone"};
    if (i + 1 < spans.size() && (spans[i + 1].low == "of" || spans[i + 1].low == "another")) return true;
    return i > 0 && before.count(spans[i - 1].low);
  }

  std::optional<int> count_at(std::size_t i) const {
    auto v = lexicon::number_value(spans[i].low);
    if (!v || pronoun_one(i)) return std::nullopt;
    if (std::find(lexicon::kCountCycle.begin(), lexicon::kCountCycle.end(), *v) == lexicon::kCountCycle.end())
      return std::nullopt;
    return v;
  }

  static bool is_numeral(std::string_view w) { return !w.empty() && std::isdigit(static_cast<unsigned char>(w[0])); }

  // Returns false when nothing in [lo, hi) is a count.
  bool edit_numbers(std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> hits;
    std::set<int> originals;
    for (std::size_t i = lo; i < hi; ++i)
      if (auto v = count_at(i)) {
        hits.push_back(i);
        originals.insert(*v);
      }
    if (hits.empty()) return false;
    std::set<int> used;
    for (const auto& [o, r] : number_map) used.insert(r);
    for (auto i : hits) {
      const int v = *count_at(i);
      if (!number_map.count(v)) {
        const auto pos = static_cast<std::size_t>(
            std::find(lexicon::kCountCycle.begin(), lexicon::kCountCycle.end(), v) - lexicon::kCountCycle.begin());
        std::optional<int> pick;
        for (std::size_t step = 1; step <= lexicon::kCountCycle.size() && !pick; ++step) {
          const int cand = lexicon::kCountCycle[(pos + step) % lexicon::kCountCycle.size()];
          if (originals.count(cand) || used.count(cand)) continue;
          if (in_penalty(penalty, lexicon::number_word(cand), true)) continue;
          pick = cand;
        }
        if (!pick) throw Error(Errc::PenaltyExhausted, "every count in the cycle is penalized or taken");
        number_map[v] = *pick;
        used.insert(*pick);
        new_values.push_back(is_numeral(spans[i].low) ? std::to_string(*pick) : lexicon::number_word(*pick));
      }
      const int r = number_map[v];
      if (overlaps(reps, spans[i].b, spans[i].e)) continue;
      const std::string orig(text.substr(spans[i].b, spans[i].e - spans[i].b));
      std::string repl = is_numeral(spans[i].low) ? std::to_string(r) : match_case(orig, lexicon::number_word(r));
      reps.push_back({spans[i].b, spans[i].e, repl});
    }
    return true;
  }

  bool edit_colors(std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> hits;
    std::set<std::string> originals;
    for (std::size_t i = lo; i < hi; ++i)
      if (lexicon::is_color_word(spans[i].low)) {
        hits.push_back(i);
        originals.insert(spans[i].low);
      }
    if (hits.empty()) return false;
    std::set<std::string> used;
    for (const auto& [o, r] : color_map) used.insert(r);
    for (auto i : hits) {
      const auto& c = spans[i].low;
      if (!color_map.count(c)) {
        const auto idx = lexicon::palette_index(c);
        const std::size_t n = lexicon::kPalette.size();
        const std::size_t start = idx ? *idx + 1 : 0;
        std::optional<std::string> pick;
        for (std::size_t step = 0; step < n && !pick; ++step) {
          std::string cand(lexicon::kPalette[(start + step) % n]);
          if (originals.count(cand) || used.count(cand) || in_penalty(penalty, cand, false)) continue;
          pick = cand;
        }
        if (!pick) throw Error(Errc::PenaltyExhausted, "every palette color is penalized or taken");
        color_map[c] = *pick;
        used.insert(*pick);
        new_values.push_back(*pick);
      }
      if (overlaps(reps, spans[i].b, spans[i].e)) continue;
      const std::string orig(text.substr(spans[i].b, spans[i].e - spans[i].b));
      reps.push_back({spans[i].b, spans[i].e, match_case(orig, color_map[c])});
    }
    return true;
  }

  bool adjacent(std::size_t i, std::size_t k) const {
    for (std::size_t t = i; t + 1 < i + k; ++t) {
      auto gap = text.substr(spans[t].e, spans[t + 1].b - spans[t].e);
      if (gap != " ") return false;
    }
    return true;
  }

  std::string key_at(std::size_t i, std::size_t k) const {
    std::string key = spans[i].low;
    for (std::size_t t = i + 1; t < i + k; ++t) key += " " + spans[t].low;
    return key;
  }

  // Swaps every occurrence (within range) of the first phrase found, trying
  // tables in priority order.
  bool edit_table(std::size_t lo, std::size_t hi, const std::vector<const lexicon::SubstitutionTable*>& tables) {
    for (const auto* table : tables) {
      for (std::size_t i = lo; i < hi; ++i) {
        for (std::size_t k = std::min<std::size_t>(3, hi - i); k >= 1; --k) {
          if (!adjacent(i, k)) continue;
          const std::string key = key_at(i, k);
          auto it = table->find(key);
          if (it == table->end()) continue;
          const auto& alts = it->second;
          const std::string& choice = alts[static_cast<std::size_t>(rng.below(alts.size()))];
          bool any = false;
          for (std::size_t j = lo; j + k <= hi; ++j) {
            if (!adjacent(j, k) || key_at(j, k) != key) continue;
            const std::size_t b = spans[j].b, e = spans[j + k - 1].e;
            if (overlaps(reps, b, e)) continue;
            reps.push_back({b, e, match_case(text.substr(b, e - b), choice)});
            any = true;
            j += k - 1;
          }
          if (any) {
            new_values.push_back(choice);
            return true;
          }
        }
      }
    }
    return false;
  }

  bool edit_any(std::size_t lo, std::size_t hi) {
    if (edit_numbers(lo, hi)) return true;
    if (edit_colors(lo, hi)) return true;
    return edit_table(lo, hi, {&lexicon::size_table(), &lexicon::spatial_table(), &lexicon::background_table(),
                               &lexicon::object_table()});
  }

  std::string result() const { return apply(text, reps); }
};

const std::vector<const lexicon::SubstitutionTable*>& tables_for(TaskCategory c) {
  using namespace lexicon;
  static const std::vector<const SubstitutionTable*> object = {&object_table(), &size_table(), &spatial_table(),
                                                               &background_table()};
  static const std::vector<const SubstitutionTable*> size = {&size_table(), &object_table(), &spatial_table(),
                                                             &background_table()};
  static const std::vector<const SubstitutionTable*> background = {&background_table(), &object_table(),
                                                                   &size_table(), &spatial_table()};
  static const std::vector<const SubstitutionTable*> spatial = {&spatial_table(), &object_table(), &size_table(),
                                                                &background_table()};
  switch (c) {
    case TaskCategory::Size: return size;
    case TaskCategory::Background: return background;
    case TaskCategory::Spatial: return spatial;
    default: return object;
  }
}

EditResult edit_existence(std::string_view response) {
  auto spans = scan(response);
  if (spans.empty() || (spans[0].low != "yes" && spans[0].low != "no"))
    throw Error(Errc::NoEditableSpan, "existence response does not open with yes/no");
  const bool was_yes = spans[0].low == "yes";
  std::vector<Replacement> reps;
  const std::string first(response.substr(spans[0].b, spans[0].e - spans[0].b));
  reps.push_back({spans[0].b, spans[0].e, match_case(first, was_yes ? "no" : "yes")});

  static const std::map<std::string, std::string> contractions = {
      {"isn't", "is"},     {"aren't", "are"}, {"wasn't", "was"},   {"weren't", "were"},   {"don't", "do"},
      {"doesn't", "does"}, {"didn't", "did"}, {"can't", "can"},    {"cannot", "can"},     {"won't", "will"},
      {"wouldn't", "would"}, {"couldn't", "could"}, {"shouldn't", "should"}, {"hasn't", "has"}, {"haven't", "have"},
  };
  static const std::set<std::string> aux = {"is",    "are", "was",   "were",   "can",   "could", "would", "will",
                                            "does",  "do",  "did",   "has",    "have",  "should", "may",  "might"};
  if (!was_yes) {
    for (std::size_t i = 1; i < spans.size(); ++i) {
      const auto& w = spans[i].low;
      if (w == "not") {
        std::size_t b = spans[i].b;
        while (b > 0 && response[b - 1] == ' ') --b;
        reps.push_back({b, spans[i].e, ""});
        break;
      }
      if (auto it = contractions.find(w); it != contractions.end()) {
        reps.push_back({spans[i].b, spans[i].e, match_case(response.substr(spans[i].b, 1), it->second)});
        break;
      }
      if (w == "no" && i + 1 < spans.size()) {
        reps.push_back({spans[i].b, spans[i].e, "some"});
        break;
      }
    }
  } else {
    for (std::size_t i = 1; i < spans.size(); ++i)
      if (aux.count(spans[i].low)) {
        reps.push_back({spans[i].e, spans[i].e, " not"});
        break;
      }
  }
  EditResult r;
  r.rejected = apply(response, reps);
  r.new_values = {was_yes ? "no" : "yes"};
  return r;
}

std::optional<std::pair<std::size_t, std::size_t>> locate(std::string_view hay, std::string_view phrase) {
  auto p = hay.find(phrase);
  if (p != std::string_view::npos) return std::make_pair(p, p + phrase.size());
  const std::string lh = text::to_lower(hay), lp = text::to_lower(phrase);
  p = lh.find(lp);
  if (p != std::string::npos) return std::make_pair(p, p + phrase.size());
  return std::nullopt;
}

}  // namespace

EditResult mock_edit(TaskCategory category, std::string_view response, const std::vector<std::string>& penalty,
                     std::uint64_t seed, const std::vector<Triplet>* triplets) {
  if (category == TaskCategory::Existence) return edit_existence(response);

  Editor ed(response, penalty, seed);
  const std::size_t n = ed.spans.size();
  bool edited = false;
  switch (category) {
    case TaskCategory::Counting: edited = ed.edit_numbers(0, n); break;
    case TaskCategory::Color: edited = ed.edit_colors(0, n); break;
    case TaskCategory::ReferentialVQA: {
      // several asks at once: touch every kind of span present
      const bool a = ed.edit_numbers(0, n);
      const bool b = ed.edit_colors(0, n);
      const bool c = !(a || b) && ed.edit_table(0, n, tables_for(TaskCategory::Spatial));
      edited = a || b || c;
      break;
    }
    case TaskCategory::Captioning: {
      if (!triplets) throw Error(Errc::MissingTriplets, "captioning edit needs triplets");
      std::vector<std::string> dims;
      for (const auto& t : *triplets) {
        auto where = locate(response, t.phrase);
        if (!where) continue;
        std::size_t lo = n, hi = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (ed.spans[i].b >= where->first && ed.spans[i].e <= where->second) {
            lo = std::min(lo, i);
            hi = std::max(hi, i + 1);
          }
        if (lo >= hi) continue;
        bool ok = false;
        switch (t.dimension) {
          case Dimension::Color: ok = ed.edit_colors(lo, hi); break;
          case Dimension::Number: ok = ed.edit_numbers(lo, hi); break;
          case Dimension::Size: ok = ed.edit_table(lo, hi, tables_for(TaskCategory::Size)); break;
          case Dimension::SpatialRelationship:
          case Dimension::ComparativeRelationship: ok = ed.edit_table(lo, hi, tables_for(TaskCategory::Spatial)); break;
          case Dimension::WeatherTime:
          case Dimension::Background: ok = ed.edit_table(lo, hi, tables_for(TaskCategory::Background)); break;
          default: break;
        }
        if (!ok) ok = ed.edit_any(lo, hi);
        if (ok) dims.emplace_back(to_string(t.dimension));
      }
      edited = !dims.empty();
      ed.new_values = dims;
      break;
    }
    default: edited = ed.edit_table(0, n, tables_for(category)); break;
  }
  if (!edited && category != TaskCategory::Captioning && category != TaskCategory::Counting &&
      category != TaskCategory::Color)
    edited = ed.edit_any(0, n);
  if (!edited) throw Error(Errc::NoEditableSpan, "no editable span for " + std::string(to_string(category)));

  EditResult r;
  r.rejected = ed.result();
  r.new_values = ed.new_values;
  return r;
}

std::vector<Triplet> mock_extract_triplets(std::string_view response) {
  auto spans = scan(response);
  std::vector<Triplet> out;
  std::set<std::pair<std::string, int>> seen;
  auto add = [&](std::size_t first, std::size_t last, std::size_t head, Dimension d) {
    std::string phrase(response.substr(spans[first].b, spans[last].e - spans[first].b));
    if (phrase.find('\n') != std::string::npos) return;
    if (seen.emplace(text::to_lower(phrase), static_cast<int>(d)).second)
      out.push_back({spans[head].low, d, phrase});
  };
  const auto& size = lexicon::size_table();
  const auto& spatial = lexicon::spatial_table();
  for (std::size_t i = 0; i + 1 < spans.size(); ++i) {
    const auto& w = spans[i].low;
    const bool next_adjacent = response.substr(spans[i].e, spans[i + 1].b - spans[i].e) == " ";
    if (!next_adjacent) continue;
    if (lexicon::is_color_word(w))
      add(i, i + 1, i + 1, Dimension::Color);
    else if (auto v = lexicon::number_value(w); v && *v > 0 && *v <= 12 && spans[i + 1].low != "of")
      add(i, i + 1, i + 1, Dimension::Number);
    else if (size.count(w))
      add(i, i + 1, i + 1, Dimension::Size);
    else if (spatial.count(w) && i > 0)
      add(i, i + 1, i - 1, Dimension::SpatialRelationship);
  }
  return out;
}

std::string format_completion(TaskCategory category, std::string_view chosen, const EditResult& r) {
  std::string out;
  switch (category) {
    case TaskCategory::Existence:
    case TaskCategory::GeneralReasoning:
    case TaskCategory::Captioning:
      out = "Original Response: " + std::string(r.revised_chosen ? *r.revised_chosen : std::string(chosen)) +
            "\nNew Response: " + r.rejected;
      break;
    case TaskCategory::Color: out = "New Response: " + r.rejected + "\nNew Colors: " + render_list(r.new_values); break;
    case TaskCategory::Counting: out = "New Response: " + r.rejected + "\nNew Counts: " + render_list(r.new_values); break;
    default: out = "New Response: " + r.rejected; break;
  }
  return out;
}

std::string format_triplet_completion(const std::vector<Triplet>& triplets) {
  return "Triplet List: " + render_triplets(triplets);
}

}  // namespace hardneg
