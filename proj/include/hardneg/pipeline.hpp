#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "hardneg/categorize.hpp"
#include "hardneg/editgen/backend.hpp"
#include "hardneg/editgen/generate.hpp"
#include "hardneg/metrics.hpp"

namespace hardneg {

/// Stage seeds derived from the one global seed:
///   categorize: derive_seed(S, "categorize")
///     balance:   derive_seed(categorize, "balance")
///     subsample: derive_seed(categorize, "subsample")
///   generate:   derive_seed(S, "generate")
std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage);

struct FilterSummary {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::map<std::string, std::size_t> dropped;  // by reason

  json to_json() const;
};

/// SFT JSONL in, kept SFT JSONL out.
FilterSummary filter_file(const std::filesystem::path& in, const std::filesystem::path& out);

struct CategorizeOptions {
  std::uint64_t seed = 0;  // global seed
  std::optional<std::size_t> budget;
  KeywordRuleset rules = KeywordRuleset::defaults();
  CategoryWeights weights = kUniformWeights;
};

struct CategorizeSummary {
  std::size_t input = 0;
  std::size_t after_balance = 0;
  std::size_t output = 0;
  std::map<std::string, std::size_t> by_category;

  json to_json() const;
};

/// SFT JSONL in, tagged JSONL out: categorize, balance Existence, subsample.
CategorizeSummary categorize_file(const std::filesystem::path& in, const std::filesystem::path& out,
                                  const CategorizeOptions& opt);

struct GenerateOptions {
  std::uint64_t seed = 0;  // global seed
  std::size_t k = 10;
  std::size_t cadence = 10;
  int max_passes = 3;
  std::size_t checkpoint_every = 50;
  bool resume = false;
};

GenerationReport generate_file(const std::filesystem::path& in, const GenerationPaths& paths, EditorBackend& backend,
                               const GenerateOptions& opt);

/// Bias report over a pairs file. An empty file gives an empty report.
BiasReport audit_file(const std::filesystem::path& pairs, const std::string& name);

struct PipelineOptions {
  std::filesystem::path input;
  std::filesystem::path out_dir = "pipeline_out";
  BackendConfig backend;
  std::uint64_t seed = 0;
  std::optional<std::size_t> budget;
  KeywordRuleset rules = KeywordRuleset::defaults();
  CategoryWeights weights = kUniformWeights;
  std::size_t k = 10;
  std::size_t cadence = 10;
  int max_passes = 3;
};

/// filter -> categorize -> generate -> audit. Writes kept.jsonl,
/// tagged.jsonl, pairs.jsonl, failed.jsonl, audit.jsonl and report.json
/// under out_dir; returns the combined report.
json run_pipeline(const PipelineOptions& opt);

}  // namespace hardneg
