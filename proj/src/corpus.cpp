#include "hardneg/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <fcntl.h>
#include <unistd.h>

#include "hardneg/text.hpp"

namespace hardneg {

namespace {

constexpr std::array<std::string_view, 10> kCategoryNames = {
    "object",   "color",   "size",      "background",        "counting",
    "spatial",  "existence", "general_reasoning", "referential_vqa", "captioning",
};

constexpr std::array<std::string_view, 10> kDimensionNames = {
    "color",      "number",     "size",          "shape",
    "other object physical attribute", "weather time", "background",
    "spatial relationship", "comparative relationship", "other object relationship",
};

[[noreturn]] void schema_error(const std::string& msg) { throw Error(Errc::MalformedLine, msg); }
[[noreturn]] void invariant(const std::string& msg) { throw Error(Errc::InvariantViolation, msg); }

const json& require(const json& j, const char* key) {
  if (!j.is_object()) schema_error("record is not a JSON object");
  auto it = j.find(key);
  if (it == j.end()) schema_error(std::string("missing \"") + key + "\"");
  return *it;
}

std::string require_string(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) schema_error(std::string("\"") + key + "\" must be a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) schema_error(std::string("\"") + key + "\" must be a string");
  return it->get<std::string>();
}

double require_number(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_number()) schema_error(std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

bool blank(std::string_view s) { return text::trim(s).empty(); }

YesNo parse_yes_no(const std::string& s, const char* key) {
  auto l = text::to_lower(text::trim(s));
  if (l == "yes") return YesNo::Yes;
  if (l == "no") return YesNo::No;
  invariant(std::string("\"") + key + "\" must be yes|no, got \"" + s + "\"");
}

const char* yes_no_str(YesNo v) { return v == YesNo::Yes ? "yes" : "no"; }

}  // namespace

// ---------------------------------------------------------------------------

const std::string& SftSample::instruction() const {
  for (const auto& t : conversations)
    if (t.speaker == Speaker::Human) return t.text;
  throw Error(Errc::InvariantViolation, "sample " + id + " has no human turn");
}

const std::string& SftSample::response() const {
  for (const auto& t : conversations)
    if (t.speaker == Speaker::Assistant) return t.text;
  throw Error(Errc::InvariantViolation, "sample " + id + " has no assistant turn");
}

std::string instruction_text(const SftSample& s) {
  std::string out = s.instruction();
  for (std::size_t p; (p = out.find("<image>")) != std::string::npos;) out.erase(p, 7);
  return std::string(text::trim(out));
}

std::string_view to_string(TaskCategory c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

std::optional<TaskCategory> parse_category(std::string_view s) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i)
    if (kCategoryNames[i] == s) return static_cast<TaskCategory>(i);
  return std::nullopt;
}

bool uses_penalty(TaskCategory c) {
  return c == TaskCategory::Color || c == TaskCategory::Counting || c == TaskCategory::Captioning;
}

std::string_view to_string(Dimension d) { return kDimensionNames[static_cast<std::size_t>(d)]; }

std::optional<Dimension> parse_dimension(std::string_view s) {
  std::string norm = text::to_lower(s);
  for (auto& c : norm)
    if (c == '_' || c == '/' || c == '-') c = ' ';
  norm = text::normalize_ws(norm);
  for (std::size_t i = 0; i < kDimensionNames.size(); ++i)
    if (kDimensionNames[i] == norm) return static_cast<Dimension>(i);
  if (norm == "count" || norm == "counting" || norm == "numbers") return Dimension::Number;
  if (norm == "colour" || norm == "colors") return Dimension::Color;
  if (norm == "other physical attribute") return Dimension::OtherPhysicalAttribute;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// validation

void validate(const SftSample& s) {
  if (s.id.empty()) invariant("sample id is empty");
  if (s.conversations.empty()) invariant("sample " + s.id + ": conversations is empty");
  for (std::size_t i = 0; i < s.conversations.size(); ++i) {
    const auto& t = s.conversations[i];
    const auto expected = (i % 2 == 0) ? Speaker::Human : Speaker::Assistant;
    if (t.speaker != expected)
      invariant("sample " + s.id + ": turn " + std::to_string(i) + " breaks human/assistant alternation");
    if (blank(t.text)) invariant("sample " + s.id + ": turn " + std::to_string(i) + " is blank");
  }
}

void validate(const PreferencePair& p) {
  if (p.id.empty()) invariant("pair id is empty");
  if (blank(p.instruction)) invariant("pair " + p.id + ": blank instruction");
  if (blank(p.chosen)) invariant("pair " + p.id + ": blank chosen");
  if (blank(p.rejected)) invariant("pair " + p.id + ": blank rejected");
  if (text::normalize_ws(p.chosen) == text::normalize_ws(p.rejected))
    invariant("pair " + p.id + ": chosen equals rejected");
  if (p.provenance.attempts < 1 || p.provenance.attempts > 2)
    invariant("pair " + p.id + ": attempts must be 1 or 2");
  if (uses_penalty(p.category) && p.provenance.new_values.empty())
    invariant("pair " + p.id + ": new_values required for " + std::string(to_string(p.category)));
}

void validate(const LogProbRecord& r) {
  if (r.step < 0) invariant("record " + r.pair_id + ": negative step");
  for (double v : {r.logp_theta_chosen, r.logp_theta_rejected, r.logp_ref_chosen, r.logp_ref_rejected}) {
    if (!std::isfinite(v)) invariant("record " + r.pair_id + ": non-finite log-probability");
    if (v > 0) invariant("record " + r.pair_id + ": log-probability must be <= 0");
  }
}

// ---------------------------------------------------------------------------
// JSON mapping

SftSample sft_from_json(const json& j) {
  SftSample s;
  s.id = require_string(j, "id");
  s.image_ref = optional_string(j, "image");
  const auto& conv = require(j, "conversations");
  if (!conv.is_array()) schema_error("\"conversations\" must be an array");
  for (const auto& t : conv) {
    auto from = require_string(t, "from");
    Turn turn;
    if (from == "human")
      turn.speaker = Speaker::Human;
    else if (from == "gpt")
      turn.speaker = Speaker::Assistant;
    else
      schema_error("unknown speaker \"" + from + "\"");
    turn.text = require_string(t, "value");
    s.conversations.push_back(std::move(turn));
  }
  validate(s);
  return s;
}

json to_json(const SftSample& s) {
  json j;
  j["id"] = s.id;
  if (s.image_ref) j["image"] = *s.image_ref;
  json conv = json::array();
  for (const auto& t : s.conversations)
    conv.push_back({{"from", t.speaker == Speaker::Human ? "human" : "gpt"}, {"value", t.text}});
  j["conversations"] = std::move(conv);
  return j;
}

json to_json(const Triplet& t) {
  return {{"element", t.visual_element}, {"dimension", to_string(t.dimension)}, {"phrase", t.phrase}};
}

Triplet triplet_from_json(const json& j) {
  Triplet t;
  t.visual_element = require_string(j, "element");
  auto dim = require_string(j, "dimension");
  auto d = parse_dimension(dim);
  if (!d) invariant("unknown triplet dimension \"" + dim + "\"");
  t.dimension = *d;
  t.phrase = require_string(j, "phrase");
  return t;
}

PreferencePair pair_from_json(const json& j) {
  PreferencePair p;
  p.id = require_string(j, "id");
  p.image_ref = optional_string(j, "image");
  auto cat = require_string(j, "category");
  auto c = parse_category(cat);
  if (!c) invariant("unknown category \"" + cat + "\"");
  p.category = *c;
  p.instruction = require_string(j, "prompt");
  p.chosen = require_string(j, "chosen");
  p.rejected = require_string(j, "rejected");
  const auto& m = require(j, "meta");
  auto& meta = p.provenance;
  meta.backend_name = require_string(m, "backend");
  const auto& att = require(m, "attempts");
  if (!att.is_number_integer()) schema_error("\"attempts\" must be an integer");
  meta.attempts = att.get<int>();
  const auto& nv = require(m, "new_values");
  if (!nv.is_array()) schema_error("\"new_values\" must be an array");
  for (const auto& v : nv) {
    if (!v.is_string()) schema_error("\"new_values\" entries must be strings");
    meta.new_values.push_back(v.get<std::string>());
  }
  if (auto it = m.find("triplets"); it != m.end() && !it->is_null()) {
    if (!it->is_array()) schema_error("\"triplets\" must be an array or null");
    std::vector<Triplet> ts;
    for (const auto& t : *it) ts.push_back(triplet_from_json(t));
    meta.triplets_used = std::move(ts);
  }
  const auto& rc = require(m, "revised_chosen");
  if (!rc.is_boolean()) schema_error("\"revised_chosen\" must be a boolean");
  meta.revised_chosen = rc.get<bool>();
  if (auto it = m.find("ld"); it != m.end() && !it->is_null()) meta.word_ld = it->get<std::size_t>();
  if (auto it = m.find("len_delta"); it != m.end() && !it->is_null()) meta.len_delta = it->get<std::int64_t>();
  validate(p);
  return p;
}

json to_json(const PreferencePair& p) {
  json meta;
  meta["backend"] = p.provenance.backend_name;
  meta["attempts"] = p.provenance.attempts;
  meta["new_values"] = p.provenance.new_values;
  if (p.provenance.triplets_used) {
    json ts = json::array();
    for (const auto& t : *p.provenance.triplets_used) ts.push_back(to_json(t));
    meta["triplets"] = std::move(ts);
  } else {
    meta["triplets"] = nullptr;
  }
  meta["revised_chosen"] = p.provenance.revised_chosen;
  if (p.provenance.word_ld) meta["ld"] = *p.provenance.word_ld;
  if (p.provenance.len_delta) meta["len_delta"] = *p.provenance.len_delta;

  json j;
  j["id"] = p.id;
  j["image"] = p.image_ref ? json(*p.image_ref) : json(nullptr);
  j["category"] = to_string(p.category);
  j["prompt"] = p.instruction;
  j["chosen"] = p.chosen;
  j["rejected"] = p.rejected;
  j["meta"] = std::move(meta);
  return j;
}

LogProbRecord logprob_from_json(const json& j) {
  LogProbRecord r;
  r.pair_id = require_string(j, "pair_id");
  const auto& step = require(j, "step");
  if (!step.is_number_integer()) schema_error("\"step\" must be an integer");
  r.step = step.get<std::int64_t>();
  r.logp_theta_chosen = require_number(j, "lp_t_w");
  r.logp_theta_rejected = require_number(j, "lp_t_l");
  r.logp_ref_chosen = require_number(j, "lp_r_w");
  r.logp_ref_rejected = require_number(j, "lp_r_l");
  validate(r);
  return r;
}

json to_json(const LogProbRecord& r) {
  return {{"pair_id", r.pair_id},           {"step", r.step},
          {"lp_t_w", r.logp_theta_chosen},  {"lp_t_l", r.logp_theta_rejected},
          {"lp_r_w", r.logp_ref_chosen},    {"lp_r_l", r.logp_ref_rejected}};
}

PredictionRecord prediction_from_json(const json& j) {
  PredictionRecord r;
  r.question_id = require_string(j, "qid");
  r.image_id = require_string(j, "iid");
  r.gold = parse_yes_no(require_string(j, "gold"), "gold");
  r.predicted = parse_yes_no(require_string(j, "pred"), "pred");
  r.group_id = optional_string(j, "group");
  return r;
}

json to_json(const PredictionRecord& r) {
  json j = {{"qid", r.question_id}, {"iid", r.image_id}, {"gold", yes_no_str(r.gold)}, {"pred", yes_no_str(r.predicted)}};
  if (r.group_id) j["group"] = *r.group_id;
  return j;
}

std::string dump_line(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::strict); }

// ---------------------------------------------------------------------------
// files

std::vector<SftSample> load_sft_corpus(const std::filesystem::path& path) {
  return load_strict<SftSample>(path, &sft_from_json);
}
std::vector<PreferencePair> load_pairs(const std::filesystem::path& path) {
  return load_strict<PreferencePair>(path, &pair_from_json);
}
std::vector<LogProbRecord> load_logprob_records(const std::filesystem::path& path) {
  return load_strict<LogProbRecord>(path, &logprob_from_json);
}
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  return load_strict<PredictionRecord>(path, &prediction_from_json);
}

std::size_t write_pairs(const std::filesystem::path& path, const std::vector<PreferencePair>& pairs) {
  for (const auto& p : pairs) validate(p);
  return write_jsonl(path, pairs);
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(Errc::Io, "cannot open " + tmp.string());
  std::size_t off = 0;
  while (off < content.size()) {
    auto n = ::write(fd, content.data() + off, content.size() - off);
    if (n < 0) {
      ::close(fd);
      throw Error(Errc::Io, "write failed for " + tmp.string());
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    throw Error(Errc::Io, "fsync failed for " + tmp.string());
  }
  ::close(fd);
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error(Errc::Io, "rename failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hardneg
