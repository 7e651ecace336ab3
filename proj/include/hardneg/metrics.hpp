#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hardneg/corpus.hpp"

namespace hardneg {

/// Whitespace split, edge punctuation stripped, ASCII case-folded, empties dropped.
std::vector<std::string> word_tokens(std::string_view text);

/// Unit-cost edit distance; two rolling rows over the shorter sequence.
std::size_t levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b);
std::size_t word_levenshtein(std::string_view a, std::string_view b);

enum class Longer { Chosen, Rejected, Equal };
enum class Bucket { Short, Long };

inline constexpr std::size_t kShortMaxTokens = 100;

struct PairStats {
  std::size_t ld = 0;
  std::size_t len_chosen = 0;
  std::size_t len_rejected = 0;
  std::int64_t len_delta = 0;  // rejected - chosen
  Longer longer = Longer::Equal;
  Bucket bucket = Bucket::Short;
};

PairStats pair_stats(std::string_view chosen, std::string_view rejected);
inline PairStats pair_stats(const PreferencePair& p) { return pair_stats(p.chosen, p.rejected); }

/// Sums for one band; means are derived so bands merge associatively.
struct BandStats {
  std::size_t count = 0;
  std::size_t chosen_longer = 0;
  std::size_t rejected_longer = 0;
  std::size_t sum_ld = 0;
  std::size_t sum_abs_delta = 0;
  std::size_t sum_delta_chosen_longer = 0;
  std::size_t sum_delta_rejected_longer = 0;

  void add(const PairStats& s);
  void merge(const BandStats& o);

  std::optional<double> pct_chosen_longer() const;
  std::optional<double> pct_rejected_longer() const;
  std::optional<double> mean_ld() const;
  std::optional<double> mean_abs_len_delta() const;
  std::optional<double> mean_delta_when_chosen_longer() const;
  std::optional<double> mean_delta_when_rejected_longer() const;

  bool operator==(const BandStats&) const = default;
};

struct BiasReport {
  std::string name;
  BandStats overall;
  BandStats short_band;
  BandStats long_band;

  void add(const PairStats& s);
  bool empty() const { return overall.count == 0; }
};

/// Throws EmptyDataset on no pairs.
BiasReport dataset_report(const std::vector<PreferencePair>& pairs, std::string name = "dataset");

json to_json(const BiasReport& r);
BiasReport bias_report_from_json(const json& j);

/// Round half away from zero, for display.
long long round_display(double v);

struct ComparisonTable {
  std::vector<BiasReport> reports;
  std::size_t lowest_ld = 0;  // index into reports

  std::string to_text() const;
  std::string to_csv() const;
};

/// Needs at least two reports (Usage otherwise).
ComparisonTable compare_reports(std::vector<BiasReport> reports);

/// Single-report table: overall, short and long bands.
std::string format_report(const BiasReport& r);

}  // namespace hardneg
