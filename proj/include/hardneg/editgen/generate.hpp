#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hardneg/categorize.hpp"
#include "hardneg/corpus.hpp"
#include "hardneg/editgen/backend.hpp"
#include "hardneg/editgen/penalty.hpp"
#include "hardneg/rng.hpp"

namespace hardneg {

// ---------------------------------------------------------------------------
// pair validation

enum class InvalidReason { IdenticalEdit, PolarityNotFlipped, NoOpEdit };

std::string_view to_string(InvalidReason r);

struct Validity {
  std::optional<InvalidReason> reason;  // nullopt: valid
  std::size_t ld = 0;
  std::int64_t len_delta = 0;

  bool valid() const { return !reason.has_value(); }
};

/// Identical (after whitespace normalization), Existence polarity not
/// flipped, or a reported new value that only sits where the chosen text
/// already had it. LD and length delta are measured, never gated on.
Validity validate_pair(const PreferencePair& pair);

// ---------------------------------------------------------------------------
// ledger

struct GenerationLedger {
  std::size_t accepted = 0;
  std::vector<std::string> requeued;
  std::vector<std::pair<std::string, std::string>> failed;  // (sample id, reason)
  std::map<TaskCategory, PenaltyList> penalties;
  std::size_t capacity = 10;
  std::size_t cadence = 10;

  GenerationLedger() = default;
  GenerationLedger(std::size_t k, std::size_t cadence_) : capacity(k), cadence(cadence_) {}

  PenaltyList& penalty(TaskCategory c);

  json to_json() const;
  static GenerationLedger from_json(const json& j);
};

/// Window update for an accepted generation.
void record_acceptance(GenerationLedger& ledger, TaskCategory category, const std::vector<std::string>& new_values);

/// `values` expanded so each appears as often as it occurs in `rejected`
/// (at least once).
std::vector<std::string> with_multiplicity(const std::vector<std::string>& values, std::string_view rejected);

// ---------------------------------------------------------------------------
// captioning

struct TripletExtraction {
  std::vector<Triplet> triplets;
  std::size_t dropped_not_substring = 0;
  std::size_t unknown_dimension = 0;
  std::string prompt;
  std::string raw;
};

/// Stage-1 completion, parsed, deduplicated, and restricted to phrases that
/// occur in the response.
TripletExtraction extract_triplets(const SftSample& sample, EditorBackend& backend, const EditRequest& base);

/// round(u * n) triplets, u uniform on [0.5, 0.75], clamped to [1, n];
/// original order kept.
std::vector<Triplet> sample_triplets(const std::vector<Triplet>& triplets, Rng& rng);

// ---------------------------------------------------------------------------
// single pair

enum class Outcome { Accepted, Requeued, Failed };

struct GenerationOutcome {
  Outcome kind = Outcome::Failed;
  std::optional<PreferencePair> pair;
  std::string reason;
  int completions = 0;  // edit completions, excluding triplet extraction
  std::vector<json> audit;
};

struct PairContext {
  int pass = 1;
  std::uint64_t seed = 0;
};

/// Prompt, complete, parse, conflict-check (one retry), validate, record.
GenerationOutcome generate_pair(const TaggedSample& sample, EditorBackend& backend, GenerationLedger& ledger,
                                const PairContext& ctx);

// ---------------------------------------------------------------------------
// full run

struct GenerationConfig {
  std::uint64_t seed = 0;
  std::size_t k = 10;
  std::size_t cadence = 10;
  int max_passes = 3;
  bool shuffle = true;
  std::size_t checkpoint_every = 50;
  /// Stop (as if killed) after this many samples in this invocation.
  std::optional<std::size_t> stop_after;
  /// Applied to the ledger's penalty lists before the first pass.
  std::map<TaskCategory, std::vector<std::string>> initial_penalty;
};

struct GenerationPaths {
  std::filesystem::path pairs;
  std::filesystem::path failed;
  std::filesystem::path audit;       // optional
  std::filesystem::path checkpoint;  // optional
};

struct GenerationReport {
  std::size_t input = 0;
  std::size_t accepted = 0;
  std::size_t failed = 0;
  int passes = 0;
  std::size_t completions = 0;
  bool interrupted = false;
  std::map<std::string, std::size_t> failure_reasons;
  std::map<TaskCategory, std::size_t> accepted_by_category;
  GenerationLedger ledger;

  json to_json() const;
};

/// Seeded-shuffled passes over the corpus; requeued samples are reshuffled
/// into the next pass, survivors of the last pass land in the failed
/// sidecar. With a checkpoint path, progress is saved every
/// `checkpoint_every` samples and `resume` continues from it.
GenerationReport run_generation(const std::vector<TaggedSample>& corpus, EditorBackend& backend,
                                const GenerationConfig& cfg, const GenerationPaths& paths, bool resume = false);

}  // namespace hardneg
