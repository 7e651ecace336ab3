#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hardneg/corpus.hpp"

namespace hardneg::stats {

// ---------------------------------------------------------------------------
// paired resampling significance

struct BootstrapOptions {
  std::size_t iterations = 1000;
  double fraction = 0.5;
  std::uint64_t seed = 0;
  bool with_replacement = false;
  double threshold = 0.95;
};

struct BootstrapResult {
  double win_rate = 0;
  std::size_t wins = 0;
  std::size_t iterations = 0;
  double sample_fraction = 0;
  std::size_t sample_size = 0;
  bool with_replacement = false;
  bool significant = false;
  std::uint64_t seed = 0;

  json to_json() const;
};

/// Each iteration draws floor(fraction * n) indices, shared by both models,
/// and counts a win when a's sum is strictly greater. Iteration i draws from
/// Rng(derive_seed(seed, i)), so the result does not depend on how iterations
/// are scheduled.
BootstrapResult bootstrap_compare(const std::vector<double>& a, const std::vector<double>& b,
                                  const BootstrapOptions& opt = {});

/// One score per line: a bare number or an object with "score".
std::vector<double> load_scores(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Fleiss' kappa

/// items x categories; each row holds how many raters chose each category.
using AgreementTable = std::vector<std::vector<std::int64_t>>;

struct KappaResult {
  std::optional<double> kappa;  // nullopt: undefined (all ratings in one category)
  double p_bar = 0;
  double p_e = 0;
  std::size_t items = 0;
  std::int64_t raters = 0;

  json to_json() const;
};

KappaResult fleiss_kappa(const AgreementTable& table);

/// Comma-separated integer rows; a first row that is not all numbers is a header.
AgreementTable load_agreement_table(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// yes/no bias

struct YesNoProfile {
  std::size_t yes_correct = 0;
  std::size_t yes_incorrect = 0;
  std::size_t no_correct = 0;
  std::size_t no_incorrect = 0;

  std::size_t total() const { return yes_correct + yes_incorrect + no_correct + no_incorrect; }
  double yes_rate() const;
  double accuracy() const;
  json to_json() const;
};

YesNoProfile yes_no_profile(const std::vector<PredictionRecord>& predictions);

// ---------------------------------------------------------------------------
// grouped accuracy (2 questions x 2 images per group)

struct GroupedScores {
  double overall_acc = 0;
  double question_acc = 0;
  double image_acc = 0;
  double group_acc = 0;
  std::size_t groups = 0;

  json to_json() const;
};

GroupedScores naturalbench_scores(const std::vector<PredictionRecord>& predictions);

}  // namespace hardneg::stats
