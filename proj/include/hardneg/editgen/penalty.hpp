#pragma once

#include <map>
#include <string>
#include <vector>

#include "hardneg/corpus.hpp"

namespace hardneg {

/// Rolling list of recently used perturbation values for one category.
/// Frozen between refreshes; every `cadence` acceptances it becomes the
/// top-`capacity` values of the window (frequency desc, then lexicographic).
class PenaltyList {
 public:
  explicit PenaltyList(TaskCategory category = TaskCategory::Color, std::size_t capacity = 10,
                       std::size_t cadence = 10);

  TaskCategory category() const { return category_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t cadence() const { return cadence_; }
  const std::vector<std::string>& values() const { return values_; }
  const std::map<std::string, std::size_t>& window() const { return window_; }
  std::size_t since_refresh() const { return since_refresh_; }

  /// One accepted generation. Each entry adds one to its frequency, so a
  /// value listed n times counts n.
  void record_acceptance(const std::vector<std::string>& new_values);

  /// Test and setup hook: replaces the current values (truncated to capacity).
  void set_values(std::vector<std::string> values);

  json state() const;
  static PenaltyList from_state(const json& j);

  bool operator==(const PenaltyList&) const = default;

 private:
  void refresh();

  TaskCategory category_;
  std::size_t capacity_;
  std::size_t cadence_;
  std::vector<std::string> values_;
  std::map<std::string, std::size_t> window_;
  std::size_t since_refresh_ = 0;
};

/// Lowercase + trim + collapse whitespace.
std::string normalize_value(std::string_view v);

/// True iff any new value equals a penalty entry. For Counting the word and
/// numeral spellings of a number are interchangeable.
bool check_penalty_conflict(const std::vector<std::string>& new_values, const PenaltyList& penalty);

/// The values from `new_values` that conflict, normalized, in order.
std::vector<std::string> conflicting_values(const std::vector<std::string>& new_values, const PenaltyList& penalty);

}  // namespace hardneg
