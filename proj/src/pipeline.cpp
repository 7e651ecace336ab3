#include "hardneg/pipeline.hpp"

#include "hardneg/corpus_impl.hpp"
#include "hardneg/rng.hpp"

namespace hardneg {

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) { return derive_seed(seed, stage); }

json FilterSummary::to_json() const { return {{"input", input}, {"kept", kept}, {"dropped", dropped}}; }

FilterSummary filter_file(const std::filesystem::path& in, const std::filesystem::path& out) {
  const auto samples = load_sft_corpus(in);
  FilterSummary s;
  s.input = samples.size();
  std::vector<SftSample> kept;
  for (const auto& sample : samples) {
    const auto v = filter_sample(sample);
    if (v.keep)
      kept.push_back(sample);
    else
      ++s.dropped[std::string(to_string(v.reason))];
  }
  s.kept = kept.size();
  write_jsonl(out, kept);
  return s;
}

json CategorizeSummary::to_json() const {
  return {{"input", input}, {"after_balance", after_balance}, {"output", output}, {"by_category", by_category}};
}

CategorizeSummary categorize_file(const std::filesystem::path& in, const std::filesystem::path& out,
                                  const CategorizeOptions& opt) {
  const auto samples = load_sft_corpus(in);
  std::vector<TaggedSample> tagged;
  tagged.reserve(samples.size());
  for (const auto& s : samples) tagged.push_back({s, assign_category(instruction_text(s), opt.rules)});

  const auto seed = stage_seed(opt.seed, "categorize");
  CategorizeSummary sum;
  sum.input = tagged.size();
  tagged = balance_existence(tagged, derive_seed(seed, "balance"));
  sum.after_balance = tagged.size();
  if (opt.budget) tagged = stratified_subsample(tagged, *opt.budget, derive_seed(seed, "subsample"), opt.weights);
  sum.output = tagged.size();
  for (const auto& t : tagged) ++sum.by_category[std::string(to_string(t.category()))];
  write_jsonl(out, tagged);
  return sum;
}

GenerationReport generate_file(const std::filesystem::path& in, const GenerationPaths& paths, EditorBackend& backend,
                               const GenerateOptions& opt) {
  const auto corpus = load_tagged(in);
  GenerationConfig cfg;
  cfg.seed = stage_seed(opt.seed, "generate");
  cfg.k = opt.k;
  cfg.cadence = opt.cadence;
  cfg.max_passes = opt.max_passes;
  cfg.checkpoint_every = opt.checkpoint_every;
  return run_generation(corpus, backend, cfg, paths, opt.resume);
}

BiasReport audit_file(const std::filesystem::path& pairs, const std::string& name) {
  BiasReport r;
  r.name = name;
  for (const auto& p : load_pairs(pairs)) r.add(pair_stats(p));
  return r;
}

json run_pipeline(const PipelineOptions& opt) {
  std::filesystem::create_directories(opt.out_dir);
  const auto d = opt.out_dir;
  json report;

  report["filter"] = filter_file(opt.input, d / "kept.jsonl").to_json();

  CategorizeOptions co;
  co.seed = opt.seed;
  co.budget = opt.budget;
  co.rules = opt.rules;
  co.weights = opt.weights;
  report["categorize"] = categorize_file(d / "kept.jsonl", d / "tagged.jsonl", co).to_json();

  auto backend = make_backend(opt.backend);
  GenerateOptions go;
  go.seed = opt.seed;
  go.k = opt.k;
  go.cadence = opt.cadence;
  go.max_passes = opt.max_passes;
  GenerationPaths paths{d / "pairs.jsonl", d / "failed.jsonl", d / "audit.jsonl", {}};
  report["generate"] = generate_file(d / "tagged.jsonl", paths, *backend, go).to_json();

  const auto bias = audit_file(d / "pairs.jsonl", "pairs");
  report["audit"] = to_json(bias);
  atomic_write(d / "report.json", report.dump(2) + "\n");
  return report;
}

}  // namespace hardneg
