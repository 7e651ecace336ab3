#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "hardneg/error.hpp"

namespace hardneg {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Domain types

enum class Speaker { Human, Assistant };

struct Turn {
  Speaker speaker;
  std::string text;

  bool operator==(const Turn&) const = default;
};

struct SftSample {
  std::string id;
  std::optional<std::string> image_ref;
  std::vector<Turn> conversations;

  /// First human turn; the categorization subject.
  const std::string& instruction() const;
  /// First assistant turn; the ground-truth (chosen) response.
  const std::string& response() const;

  bool operator==(const SftSample&) const = default;
};

/// instruction() with the "<image>" placeholder removed and trimmed.
std::string instruction_text(const SftSample& s);

enum class TaskCategory {
  Object,
  Color,
  Size,
  Background,
  Counting,
  Spatial,
  Existence,
  GeneralReasoning,
  ReferentialVQA,
  Captioning,
};

inline constexpr std::array<TaskCategory, 10> kAllCategories = {
    TaskCategory::Object,   TaskCategory::Color,           TaskCategory::Size,
    TaskCategory::Background, TaskCategory::Counting,      TaskCategory::Spatial,
    TaskCategory::Existence, TaskCategory::GeneralReasoning, TaskCategory::ReferentialVQA,
    TaskCategory::Captioning,
};

std::string_view to_string(TaskCategory c);
std::optional<TaskCategory> parse_category(std::string_view s);

/// Categories whose generation is steered by a penalty list.
bool uses_penalty(TaskCategory c);

enum class Dimension {
  Color,
  Number,
  Size,
  Shape,
  OtherPhysicalAttribute,
  WeatherTime,
  Background,
  SpatialRelationship,
  ComparativeRelationship,
  OtherObjectRelationship,
};

inline constexpr std::array<Dimension, 10> kAllDimensions = {
    Dimension::Color,      Dimension::Number,     Dimension::Size,
    Dimension::Shape,      Dimension::OtherPhysicalAttribute, Dimension::WeatherTime,
    Dimension::Background, Dimension::SpatialRelationship, Dimension::ComparativeRelationship,
    Dimension::OtherObjectRelationship,
};

/// Lowercase display name as used in editor prompts ("spatial relationship").
std::string_view to_string(Dimension d);
/// Accepts the display names case-insensitively, with `_`/`/` treated as
/// spaces, plus "count"/"counting" for Number.
std::optional<Dimension> parse_dimension(std::string_view s);

struct Triplet {
  std::string visual_element;
  Dimension dimension;
  std::string phrase;

  bool operator==(const Triplet&) const = default;
};

struct EditorMetadata {
  std::string backend_name;
  int attempts = 1;
  std::vector<std::string> new_values;
  std::optional<std::vector<Triplet>> triplets_used;
  bool revised_chosen = false;
  // audit-only, never gating
  std::optional<std::size_t> word_ld;
  std::optional<std::int64_t> len_delta;

  bool operator==(const EditorMetadata&) const = default;
};

struct PreferencePair {
  std::string id;
  std::optional<std::string> image_ref;
  TaskCategory category = TaskCategory::Object;
  std::string instruction;
  std::string chosen;
  std::string rejected;
  EditorMetadata provenance;

  bool operator==(const PreferencePair&) const = default;
};

struct LogProbRecord {
  std::string pair_id;
  std::int64_t step = 0;
  double logp_theta_chosen = 0;
  double logp_theta_rejected = 0;
  double logp_ref_chosen = 0;
  double logp_ref_rejected = 0;

  bool operator==(const LogProbRecord&) const = default;
};

enum class YesNo { Yes, No };

struct PredictionRecord {
  std::string question_id;
  std::string image_id;
  YesNo gold = YesNo::Yes;
  YesNo predicted = YesNo::Yes;
  std::optional<std::string> group_id;

  bool operator==(const PredictionRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Invariant checks: throw Error{InvariantViolation}

void validate(const SftSample& s);
void validate(const PreferencePair& p);
void validate(const LogProbRecord& r);

// ---------------------------------------------------------------------------
// JSON mapping. from_json_* validate and throw Error{InvariantViolation} or
// Error{MalformedLine} (schema problems).

SftSample sft_from_json(const json& j);
json to_json(const SftSample& s);

PreferencePair pair_from_json(const json& j);
json to_json(const PreferencePair& p);

LogProbRecord logprob_from_json(const json& j);
json to_json(const LogProbRecord& r);

PredictionRecord prediction_from_json(const json& j);
json to_json(const PredictionRecord& r);

json to_json(const Triplet& t);
Triplet triplet_from_json(const json& j);

/// Compact single-line dump that keeps UTF-8 bytes as-is.
std::string dump_line(const json& j);

// ---------------------------------------------------------------------------
// JSONL reading

struct LineError {
  std::size_t line_no;
  std::string reason;
};

template <class T>
using Parsed = std::variant<T, LineError>;

/// Lazy line-by-line reader. Blank lines are skipped; every other line either
/// yields a record or a LineError. Each reader owns its cursor.
template <class T>
class JsonlReader {
 public:
  using Decode = T (*)(const json&);

  JsonlReader(const std::filesystem::path& path, Decode decode);

  std::optional<Parsed<T>> next();

 private:
  std::ifstream in_;
  Decode decode_;
  std::size_t line_no_ = 0;
};

template <class T>
struct LoadResult {
  std::vector<T> records;
  std::vector<LineError> errors;
};

/// Parse a single JSONL line (exposed for tests and the HTTP layer).
template <class T>
Parsed<T> parse_line(std::string_view line, std::size_t line_no, T (*decode)(const json&));

template <class T>
LoadResult<T> load_collect(const std::filesystem::path& path, T (*decode)(const json&));

/// Loads everything; throws Error{MalformedLine} itemizing every bad line.
template <class T>
std::vector<T> load_strict(const std::filesystem::path& path, T (*decode)(const json&));

std::vector<SftSample> load_sft_corpus(const std::filesystem::path& path);
std::vector<PreferencePair> load_pairs(const std::filesystem::path& path);
std::vector<LogProbRecord> load_logprob_records(const std::filesystem::path& path);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// JSONL writing

/// Validates every pair before touching the file; returns the count written.
std::size_t write_pairs(const std::filesystem::path& path, const std::vector<PreferencePair>& pairs);

template <class T>
std::size_t write_jsonl(const std::filesystem::path& path, const std::vector<T>& records);

/// Writes `content` to a sibling temp file, fsyncs it and renames over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace hardneg

#include "hardneg/corpus_impl.hpp"
