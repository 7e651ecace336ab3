#include "hardneg/editgen/parse.hpp"

#include <regex>
#include <set>

#include "hardneg/text.hpp"

namespace hardneg {

namespace {

enum class Label { NewResponse, OriginalResponse, NewColors, NewCounts, TripletList, Other };

struct Field {
  Label label;
  std::string content;
};

struct LabelSpec {
  std::string_view text;
  Label label;
};

constexpr LabelSpec kLabels[] = {
    {"new response", Label::NewResponse},   {"original response", Label::OriginalResponse},
    {"new colors", Label::NewColors},       {"new colours", Label::NewColors},
    {"new counts", Label::NewCounts},       {"triplet list", Label::TripletList},
    {"penalty list", Label::Other},         {"instruction", Label::Other},
    {"your turn", Label::Other},
};

bool is_decoration(char c) { return c == '*' || c == '#' || c == '"' || c == '>' || c == '_' || c == '`'; }

// Returns the label and the remainder after its colon when `line` opens with one.
std::optional<Field> match_label(std::string_view line, bool& opened_with_quote) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  opened_with_quote = i < line.size() && line[i] == '"';
  while (i < line.size() && is_decoration(line[i])) ++i;
  const std::string low = text::to_lower(line.substr(i));
  for (const auto& spec : kLabels) {
    if (low.compare(0, spec.text.size(), spec.text) != 0) continue;
    std::size_t j = spec.text.size();
    while (j < low.size() && (low[j] == ' ' || is_decoration(low[j]))) ++j;
    if (spec.label == Label::Other && spec.text == "your turn") return Field{Label::Other, ""};
    if (j >= low.size() || low[j] != ':') continue;
    ++j;
    std::string_view rest = line.substr(i + j);
    std::size_t k = 0;
    while (k < rest.size() && (rest[k] == '*' || rest[k] == '_')) ++k;
    return Field{spec.label, std::string(rest.substr(k))};
  }
  return std::nullopt;
}

std::string unquote(std::string s, bool opened_with_quote) {
  auto t = std::string(text::trim(s));
  while (!t.empty() && (t.back() == '*' || t.back() == '_')) t.pop_back();
  t = std::string(text::trim(t));
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') return std::string(text::trim(t.substr(1, t.size() - 2)));
  if (opened_with_quote && !t.empty() && t.back() == '"') t.pop_back();
  if (!t.empty() && t.front() == '"' && t.find('"', 1) == std::string::npos) t.erase(0, 1);
  return std::string(text::trim(t));
}

std::vector<Field> split_fields(std::string_view raw) {
  std::vector<Field> fields;
  std::vector<bool> quoted;
  std::size_t start = 0;
  while (start <= raw.size()) {
    auto end = raw.find('\n', start);
    if (end == std::string_view::npos) end = raw.size();
    std::string_view line = raw.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    bool q = false;
    if (auto f = match_label(line, q)) {
      fields.push_back(std::move(*f));
      quoted.push_back(q);
    } else if (!fields.empty()) {
      fields.back().content += '\n';
      fields.back().content += line;
    }
    start = end + 1;
  }
  for (std::size_t i = 0; i < fields.size(); ++i) fields[i].content = unquote(fields[i].content, quoted[i]);
  return fields;
}

const Field* find(const std::vector<Field>& fields, Label l) {
  for (const auto& f : fields)
    if (f.label == l) return &f;
  return nullptr;
}

[[noreturn]] void missing(std::string_view label) {
  throw Error(Errc::UnparseableOutput, "expected label \"" + std::string(label) + "\"");
}

}  // namespace

std::vector<std::string> parse_value_list(std::string_view s) {
  std::string body(text::trim(s));
  const auto nl = body.find('\n');
  if (nl != std::string::npos) body.resize(nl);
  if (!body.empty() && body.front() == '[') {
    auto close = body.find(']');
    body = body.substr(1, close == std::string::npos ? std::string::npos : close - 1);
  }
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= body.size()) {
    auto comma = body.find(',', start);
    if (comma == std::string::npos) comma = body.size();
    std::string item(text::trim(std::string_view(body).substr(start, comma - start)));
    while (!item.empty() && (item.front() == '"' || item.front() == '\'')) item.erase(0, 1);
    while (!item.empty() && (item.back() == '"' || item.back() == '\'' || item.back() == '.')) item.pop_back();
    item = text::normalize_ws(text::to_lower(item));
    if (!item.empty()) out.push_back(item);
    start = comma + 1;
  }
  return out;
}

EditResult parse_edit_response(TaskCategory category, std::string_view raw) {
  if (text::trim(raw).empty()) throw Error(Errc::UnparseableOutput, "empty completion");
  EditResult r;
  r.raw = std::string(raw);
  const auto fields = split_fields(raw);

  const Field* nr = find(fields, Label::NewResponse);
  if (!nr) missing("New Response:");
  if (nr->content.empty()) throw Error(Errc::EmptyEdit, "\"New Response:\" is empty");
  r.rejected = nr->content;

  if (category == TaskCategory::Existence) {
    const Field* orig = find(fields, Label::OriginalResponse);
    if (!orig) missing("Original Response:");
    if (!orig->content.empty()) r.revised_chosen = orig->content;
  }

  if (category == TaskCategory::Color || category == TaskCategory::Counting) {
    const Label want = category == TaskCategory::Color ? Label::NewColors : Label::NewCounts;
    const Field* list = find(fields, want);
    // the counting template's example footer reads "New Colors:", accept either spelling
    if (!list) list = find(fields, category == TaskCategory::Color ? Label::NewCounts : Label::NewColors);
    const char* label = category == TaskCategory::Color ? "New Colors:" : "New Counts:";
    if (!list) missing(label);
    r.new_values = parse_value_list(list->content);
    if (r.new_values.empty()) throw Error(Errc::UnparseableOutput, std::string("\"") + label + "\" list is empty");
  }
  return r;
}

TripletParse parse_triplets(std::string_view raw) {
  const std::string s(raw);
  static const std::regex label(R"([Tt]riplet [Ll]ist\s*:)");
  std::smatch m;
  if (!std::regex_search(s, m, label)) missing("Triplet List:");
  const std::string body = m.suffix().str();

  static const std::regex item(
      R"re(\(\s*(?:"([^"]*)"|'([^']*)')\s*,\s*(?:"([^"]*)"|'([^']*)')\s*,\s*(?:"([^"]*)"|'([^']*)')\s*\))re");
  auto field = [](const std::smatch& mm, int k) { return mm[2 * k + 1].matched ? mm[2 * k + 1].str() : mm[2 * k + 2].str(); };
  TripletParse out;
  std::set<std::tuple<std::string, int, std::string>> seen;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), item); it != std::sregex_iterator(); ++it) {
    const auto& mm = *it;
    auto dim = parse_dimension(field(mm, 1));
    if (!dim) {
      ++out.unknown_dimension;
      continue;
    }
    Triplet t{text::normalize_ws(field(mm, 0)), *dim, text::normalize_ws(field(mm, 2))};
    if (t.visual_element.empty() || t.phrase.empty()) continue;
    if (seen.emplace(text::to_lower(t.visual_element), static_cast<int>(t.dimension), text::to_lower(t.phrase)).second)
      out.triplets.push_back(std::move(t));
  }
  return out;
}

}  // namespace hardneg
