#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hardneg/corpus.hpp"

namespace hardneg::review {

enum class Label { HardNegative, NotHardNegative };

std::string_view to_string(Label l);
std::optional<Label> parse_label(std::string_view s);

struct ReviewTask {
  std::string pair_id;
  TaskCategory category = TaskCategory::Object;
  std::string image_ref;
  std::string instruction;
  std::string chosen;
  std::string rejected;

  bool operator==(const ReviewTask&) const = default;
};

struct LabelEntry {
  std::string annotator;
  std::string pair_id;
  Label label = Label::HardNegative;
  std::uint64_t seq = 0;  // submission order within the session

  bool operator==(const LabelEntry&) const = default;
};

struct AnnotationSession {
  std::string session_id;
  std::vector<ReviewTask> tasks;
  std::vector<std::string> annotators;
  std::vector<LabelEntry> labels;
  std::string created_at;
  std::uint64_t seed = 0;
  std::string pairs_file;
  std::size_t n = 0;

  std::optional<std::size_t> task_index(const std::string& pair_id) const;
  std::optional<Label> label_of(const std::string& annotator, const std::string& pair_id) const;
  bool has_annotator(const std::string& a) const;

  json to_json() const;
  static AnnotationSession from_json(const json& j);
  bool operator==(const AnnotationSession&) const = default;
};

/// Stable id from (pairs file, n, annotators, seed).
std::string session_id_for(const std::string& pairs_file, std::size_t n, const std::vector<std::string>& annotators,
                           std::uint64_t seed);

/// Per-category quotas for n tasks, even across the categories present and
/// capped by what each has; remainders go to the lowest category index.
std::map<TaskCategory, std::size_t> session_quotas(const std::map<TaskCategory, std::size_t>& available,
                                                  std::size_t n);

/// Seeded shuffle of `cats`, then a greedy pass that keeps the first
/// candidate which is neither a repeat of the previous one nor leaves the
/// rest unorderable. Returns a permutation of indices into `cats`.
/// InfeasibleOrdering if one category exceeds ceil(n / 2).
std::vector<std::size_t> order_without_repeats(const std::vector<TaskCategory>& cats, std::uint64_t seed);

AnnotationSession create_session(const std::vector<PreferencePair>& pairs, std::size_t n,
                                 const std::vector<std::string>& annotators, std::uint64_t seed,
                                 const std::string& pairs_file = "");

/// Lowest-index task this annotator has not labeled; nullopt when done.
std::optional<std::size_t> next_task(const AnnotationSession& s, const std::string& annotator);

/// Appends the label. UnknownAnnotator, UnknownTask, DuplicateLabel.
void submit_label(AnnotationSession& s, const std::string& annotator, const std::string& pair_id, Label label);

struct SessionStats {
  std::map<std::string, double> completed;  // per annotator, fraction of tasks
  std::size_t total_tasks = 0;
  std::size_t fully_labeled = 0;
  std::optional<double> alignment;  // majority-HardNegative share of fully labeled tasks
  std::optional<double> kappa;
  /// Every rating identical: Fleiss' formula is 0/0, agreement reported as 1.
  bool kappa_degenerate = false;

  json to_json() const;
};

SessionStats session_stats(const AnnotationSession& s);

/// One JSON object per label, in task order then annotator order.
std::string export_labels(const AnnotationSession& s);

}  // namespace hardneg::review
