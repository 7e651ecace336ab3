// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria (0 = all pass).

#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <iostream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "hardneg/categorize.hpp"
#include "hardneg/dpo.hpp"
#include "hardneg/editgen/generate.hpp"
#include "hardneg/metrics.hpp"
#include "hardneg/pipeline.hpp"
#include "hardneg/review/store.hpp"
#include "hardneg/stats.hpp"
#include "support/corpus_gen.hpp"
#include "support/oracles.hpp"

using namespace hardneg;
using Clock = std::chrono::steady_clock;

namespace tol {
// 1: released pairs
constexpr double kLdTarget = 6, kLdTol = 2;
constexpr double kDeltaTarget = 3, kDeltaTol = 2;
constexpr double kChosenPctTarget = 21, kRejectedPctTarget = 79, kSplitTol = 3;
constexpr double kReleasedSeconds = 60;
// 1: bundled fixture, frozen from tests/oracle/ld_oracle.py
constexpr std::size_t kFixtureCount = 60, kFixtureSumLd = 413, kFixtureSumAbsDelta = 187;
constexpr std::size_t kFixtureChosenLonger = 13, kFixtureRejectedLonger = 25;
// 4
constexpr std::size_t kMockSamples = 1000;
constexpr double kMockSeconds = 30;
// 5
constexpr double kLn2Tol = 1e-12, kGradRelTol = 1e-6, kFdEps = 1e-5, kLossTol = 1e-6;
constexpr double kLossAt02 = 0.598139;
constexpr int kGradInstances = 100;
// 6
constexpr double kDynamicsSeconds = 20;
// 7
constexpr double kBootstrapTol = 0.04;
// 8
constexpr double kKappaTol = 1e-9;
// 9
constexpr int kGroupedDatasets = 1000;
// 10
constexpr int kOrderingSeeds = 100;
constexpr std::size_t kCrashAcksBeforeKill = 25;
}  // namespace tol

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }



// ---------------------------------------------------------------------------

Verdict length_bias() {
  if (const char* released = std::getenv("HARDNEG_RELEASED_PAIRS")) {
    const auto t0 = Clock::now();
    const auto r = audit_file(released, "released");
    const double secs = seconds_since(t0);
    if (r.empty()) return {false, "released pairs file is empty"};
    const double ld = *r.overall.mean_ld(), d = *r.overall.mean_abs_len_delta();
    const double c = *r.overall.pct_chosen_longer(), k = *r.overall.pct_rejected_longer();
    const bool ok = std::abs(ld - tol::kLdTarget) <= tol::kLdTol && std::abs(d - tol::kDeltaTarget) <= tol::kDeltaTol &&
                    std::abs(c - tol::kChosenPctTarget) <= tol::kSplitTol &&
                    std::abs(k - tol::kRejectedPctTarget) <= tol::kSplitTol && secs < tol::kReleasedSeconds;
    return {ok, "released n=" + std::to_string(r.overall.count) + " ld=" + fmt(ld, 3) + " |dlen|=" + fmt(d, 3) +
                    " split=(" + fmt(c, 3) + ", " + fmt(k, 3) + ") " + fmt(secs, 3) + "s"};
  }
  const auto r = audit_file(std::filesystem::path(HARDNEG_TEST_DATA) / "fixture_pairs.jsonl", "fixture");
  const auto& o = r.overall;
  const bool ok = o.count == tol::kFixtureCount && o.sum_ld == tol::kFixtureSumLd &&
                  o.sum_abs_delta == tol::kFixtureSumAbsDelta && o.chosen_longer == tol::kFixtureChosenLonger &&
                  o.rejected_longer == tol::kFixtureRejectedLonger;
  return {ok, "fixture (HARDNEG_RELEASED_PAIRS unset) n=" + std::to_string(o.count) + " ld=" + fmt(*o.mean_ld(), 4) +
                  " |dlen|=" + fmt(*o.mean_abs_len_delta(), 4) + " split=(" + fmt(*o.pct_chosen_longer(), 4) + ", " +
                  fmt(*o.pct_rejected_longer(), 4) + ")"};
}

Verdict golden_categories() {
  const std::vector<std::pair<std::string, TaskCategory>> golden = {
      {"How many planes are visible in the image?", TaskCategory::Counting},
      {"Are there any people in the picture?", TaskCategory::Existence},
      {"How many people are in the image and where are they located?", TaskCategory::ReferentialVQA},
      {"What color are the couches in the living room?", TaskCategory::Color},
  };
  std::size_t hits = 0;
  for (const auto& [ins, want] : golden)
    hits += assign_category(ins, KeywordRuleset::defaults()).final_category == want;
  return {hits == golden.size(), std::to_string(hits) + "/" + std::to_string(golden.size()) + " golden instructions"};
}

Verdict penalty_cases() {
  const std::vector<std::string> p2a = {"yellow", "black", "beige", "teal", "green",
                                        "burgundy", "sepia", "lavender", "purple", "orange"};
  const std::vector<std::string> p2c = {"yellow", "black", "beige", "blue", "green",
                                        "red", "silver", "lavender", "purple", "orange"};
  auto edit = [](const std::string& colors, const std::string& list) {
    return "New Response: The subway train in the image is " + colors + ".\nNew Colors: " + list;
  };
  const auto good = edit("pink, turquoise, and white", "['pink', 'turquoise', 'white']");
  const auto black = edit("pink, black, white", "['pink', 'black', 'white']");
  const auto yg = edit("yellow, green, white", "['yellow', 'green', 'white']");
  const auto red = edit("red, turquoise, white", "['red', 'turquoise', 'white']");

  TaggedSample s;
  s.sample = testkit::make_sample("subway", "What colors are present on the subway train in the image?",
                                  "The subway train in the image is orange, blue, and silver.");
  s.assignment = {{TaskCategory::Color}, TaskCategory::Color};

  std::vector<json> audit;
  auto keep = [&](const GenerationOutcome& o) {
    audit.insert(audit.end(), o.audit.begin(), o.audit.end());
    return o;
  };

  ScriptedBackend b1({{"subway", {good}}});
  GenerationLedger l1;
  const auto c1 = keep(generate_pair(s, b1, l1, {1, 1}));

  ScriptedBackend b2({{"subway", {black, good}}});
  GenerationLedger l2;
  l2.penalty(TaskCategory::Color).set_values(p2a);
  const auto c2a = keep(generate_pair(s, b2, l2, {1, 1}));

  ScriptedBackend b3({{"subway", {black, yg, red, good}}});
  GenerationLedger l3;
  l3.penalty(TaskCategory::Color).set_values(p2a);
  const auto c2b = keep(generate_pair(s, b3, l3, {1, 1}));
  l3.penalty(TaskCategory::Color).set_values(p2c);
  const auto c2c = keep(generate_pair(s, b3, l3, {2, 1}));

  const bool cases = c1.kind == Outcome::Accepted && c1.completions == 1 && c2a.kind == Outcome::Accepted &&
                     c2a.completions == 2 && c2b.kind == Outcome::Requeued && c2c.kind == Outcome::Accepted &&
                     c2c.pair->provenance.attempts == 2;

  std::size_t accepts = 0, unsound = 0;
  for (const auto& e : audit) {
    if (e["event"] != "decision" || e["decision"] != "accept" || !e["penalty"].is_array()) continue;
    ++accepts;
    PenaltyList snap(TaskCategory::Color, 100, 100);
    snap.set_values(e["penalty"].get<std::vector<std::string>>());
    unsound += check_penalty_conflict(e["new_values"].get<std::vector<std::string>>(), snap);
  }
  return {cases && accepts == 3 && unsound == 0,
          std::string("case-1 accept, 2a retry+accept, 2b requeue, 2c re-pass accept: ") + (cases ? "ok" : "mismatch") +
              "; audit accepts=" + std::to_string(accepts) + " penalized=" + std::to_string(unsound)};
}

Verdict mock_determinism() {
  testkit::TempDir dir("accept-mock");
  write_jsonl(dir / "sft.jsonl", testkit::synth_sft(tol::kMockSamples, 42));
  PipelineOptions opt;
  opt.input = dir / "sft.jsonl";
  opt.seed = 7;
  opt.out_dir = dir / "run1";
  const auto t0 = Clock::now();
  const auto report = run_pipeline(opt);
  const double secs = seconds_since(t0);
  opt.out_dir = dir / "run2";
  run_pipeline(opt);
  const bool same = read_file(dir / "run1" / "pairs.jsonl") == read_file(dir / "run2" / "pairs.jsonl");
  const std::size_t accepted = report["generate"]["accepted"];
  return {same && secs < tol::kMockSeconds && accepted > 0,
          std::to_string(tol::kMockSamples) + " samples, accepted " + std::to_string(accepted) + ", " + fmt(secs, 3) +
              "s per run, byte-identical=" + (same ? "yes" : "no")};
}

Verdict dpo_math() {
  Rng rng(2025);
  double worst_ln2 = 0, worst_rel = 0;
  for (int t = 0; t < tol::kGradInstances; ++t) {
    std::vector<std::string> vocab;
    const auto v = 2 + rng.below(7);
    for (std::size_t i = 0; i < v; ++i) vocab.push_back("t" + std::to_string(i));
    auto policy = dpo::PolicyParams::uniform(vocab), ref = policy;
    for (auto& z : policy.logits) z = rng.uniform() * 4 - 2;
    for (auto& z : ref.logits) z = rng.uniform() * 4 - 2;
    std::vector<dpo::TokenizedPair> batch;
    for (std::size_t p = 0, n = 1 + rng.below(4); p < n; ++p) {
      dpo::TokenizedPair tp{"p" + std::to_string(p), {}, {}};
      for (std::size_t i = 0, len = 1 + rng.below(8); i < len; ++i) tp.chosen.push_back(vocab[rng.below(v)]);
      for (std::size_t i = 0, len = 1 + rng.below(8); i < len; ++i) tp.rejected.push_back(vocab[rng.below(v)]);
      worst_ln2 = std::max(worst_ln2, std::abs(dpo::deltas(ref, ref, tp, 0.1).loss - std::log(2.0)));
      batch.push_back(tp);
    }
    const double alpha = 0.05 + rng.uniform();
    const auto g = dpo::grad_dpo(policy, ref, batch, alpha);
    double num_sq = 0, err_sq = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto up = policy, down = policy;
      up.logits[i] += tol::kFdEps;
      down.logits[i] -= tol::kFdEps;
      const double fd =
          (dpo::batch_loss(up, ref, batch, alpha) - dpo::batch_loss(down, ref, batch, alpha)) / (2 * tol::kFdEps);
      num_sq += fd * fd;
      err_sq += (fd - g[i]) * (fd - g[i]);
    }
    worst_rel = std::max(worst_rel, std::sqrt(err_sq) / std::max(std::sqrt(num_sq), 1e-3));
  }
  const double l02 = dpo::dpo_loss(2.0, 0.0, 0.1);
  const bool ok = worst_ln2 <= tol::kLn2Tol && worst_rel <= tol::kGradRelTol && std::abs(l02 - tol::kLossAt02) <= tol::kLossTol;
  return {ok, "max |loss - ln2|=" + fmt(worst_ln2, 3) + ", max grad rel err=" + fmt(worst_rel, 3) +
                  ", -ln sigma(0.2)=" + fmt(l02, 7)};
}

Verdict dynamics() {
  const auto t0 = Clock::now();
  dpo::DpoConfig cfg;
  cfg.alpha = 0.1;
  cfg.learning_rate = 0.05;
  cfg.steps = 300;
  auto run = [&](dpo::SynthKind kind) {
    dpo::SynthConfig sc;
    sc.kind = kind;
    sc.n = 500;
    const auto set = dpo::synth_pairs(sc);
    return std::make_pair(set, dpo::train(dpo::PolicyParams::uniform(set.vocab), set.pairs, cfg));
  };
  const auto [lb_set, lb] = run(dpo::SynthKind::LengthBiased);
  std::optional<int> first;
  bool stays = false;
  for (const auto& row : lb.rows)
    if (row.reward_acc == 1.0) {
      first = row.step;
      break;
    }
  if (first) {
    stays = true;
    for (const auto& row : lb.rows)
      if (row.step >= *first && row.reward_acc != 1.0) stays = false;
  }
  const auto [hn_set, hn] = run(dpo::SynthKind::ConflictingHardNegative);
  const double hn_final = hn.rows.back().reward_acc;

  const auto [dup_set, dup] = run(dpo::SynthKind::Duplicate);
  const auto ref = dpo::PolicyParams::uniform(dup_set.vocab);
  double dref = 0;
  std::size_t dups = 0;
  for (std::size_t i = 0; i < dup_set.pairs.size(); ++i)
    if (dup_set.duplicate[i]) {
      dref += dpo::deltas(ref, ref, dup_set.pairs[i], cfg.alpha).delta_ref;
      ++dups;
    }
  const double secs = seconds_since(t0);
  const bool ok = first && stays && hn_final < 1.0 && dups > 0 && dref == 0.0 && secs < tol::kDynamicsSeconds;
  return {ok, "length_biased acc=1.0 from step " + (first ? std::to_string(*first) : std::string("never")) +
                  (stays ? " and stays" : " (not sustained)") + "; hard_negative final acc=" + fmt(hn_final, 4) +
                  "; duplicate mean dref=" + fmt(dups ? dref / static_cast<double>(dups) : NAN) + " over " +
                  std::to_string(dups) + " pairs; " + fmt(secs, 3) + "s"};
}

Verdict bootstrap() {
  const std::vector<double> a = {1, 1, 1, 0}, b = {0, 1, 0, 0};
  const double exact = oracle::bootstrap_enumerate(a, b, 2);
  stats::BootstrapOptions opt;
  opt.iterations = 1000;
  opt.seed = 20240601;
  const auto r = stats::bootstrap_compare(a, b, opt);
  const auto refl = stats::bootstrap_compare(a, a, opt);
  const bool ok = std::abs(exact - 5.0 / 6.0) < 1e-15 && std::abs(r.win_rate - exact) <= tol::kBootstrapTol &&
                  refl.win_rate == 0.0;
  return {ok, "enumerated=" + fmt(exact) + " seeded=" + fmt(r.win_rate) + " reflexive=" + fmt(refl.win_rate)};
}

Verdict kappa() {
  const auto u = stats::fleiss_kappa({{3, 0}, {0, 3}, {3, 0}, {0, 3}, {3, 0}});
  const auto hand = stats::fleiss_kappa({{2, 1}, {1, 2}, {2, 1}, {1, 2}, {3, 0}});
  const auto o = oracle::fleiss({{2, 1}, {1, 2}, {2, 1}, {1, 2}, {3, 0}});
  const auto deg = stats::fleiss_kappa({{3, 0}, {3, 0}, {3, 0}, {3, 0}, {3, 0}});
  const bool ok = u.kappa && std::abs(*u.kappa - 1.0) <= tol::kKappaTol && hand.kappa &&
                  std::abs(*hand.kappa - o.kappa) <= tol::kKappaTol && !deg.kappa;
  return {ok, "unanimous=" + (u.kappa ? fmt(*u.kappa) : "undefined") +
                  " hand=" + (hand.kappa ? fmt(*hand.kappa, 10) : "undefined") + " oracle=" + fmt(o.kappa, 10) +
                  " degenerate=" + (deg.kappa ? fmt(*deg.kappa) : "undefined")};
}

Verdict grouped() {
  Rng rng(9);
  auto records = [&](const std::string& g, const oracle::GroupGrid& grid) {
    std::vector<PredictionRecord> out;
    for (int q = 0; q < 2; ++q)
      for (int i = 0; i < 2; ++i) {
        const auto gold = rng.below(2) ? YesNo::Yes : YesNo::No;
        const auto other = gold == YesNo::Yes ? YesNo::No : YesNo::Yes;
        out.push_back({g + "q" + std::to_string(q), g + "i" + std::to_string(i), gold, grid.correct[q][i] ? gold : other, g});
      }
    return out;
  };
  int violations = 0, mismatches = 0;
  for (int t = 0; t < tol::kGroupedDatasets; ++t) {
    std::vector<PredictionRecord> recs;
    std::vector<oracle::GroupGrid> grids;
    for (std::size_t g = 0, n = 1 + rng.below(10); g < n; ++g) {
      oracle::GroupGrid grid{};
      for (auto& row : grid.correct)
        for (auto& c : row) c = rng.below(3) != 0;
      grids.push_back(grid);
      auto part = records("g" + std::to_string(g), grid);
      recs.insert(recs.end(), part.begin(), part.end());
    }
    const auto s = stats::naturalbench_scores(recs);
    violations += !(s.group_acc <= s.question_acc && s.group_acc <= s.image_acc && s.image_acc <= s.overall_acc &&
                    s.question_acc <= s.overall_acc);
    const auto o = oracle::naturalbench(grids);
    mismatches += std::abs(s.overall_acc - o.overall) > 1e-12 || std::abs(s.question_acc - o.question) > 1e-12 ||
                  std::abs(s.image_acc - o.image) > 1e-12 || std::abs(s.group_acc - o.group) > 1e-12;
  }
  const oracle::GroupGrid four{{{true, true}, {true, true}}}, three{{{true, true}, {true, false}}};
  const auto s4 = stats::naturalbench_scores(records("a", four));
  const auto s3 = stats::naturalbench_scores(records("b", three));
  const auto o4 = oracle::naturalbench({four}), o3 = oracle::naturalbench({three});
  const bool fixtures = s4.overall_acc == o4.overall && s4.question_acc == o4.question && s4.image_acc == o4.image &&
                        s4.group_acc == o4.group && s3.overall_acc == o3.overall && s3.question_acc == o3.question &&
                        s3.image_acc == o3.image && s3.group_acc == o3.group;
  return {violations == 0 && mismatches == 0 && fixtures,
          std::to_string(tol::kGroupedDatasets) + " datasets, " + std::to_string(violations) + " ordering violations, " +
              std::to_string(mismatches) + " oracle mismatches; 3/4 fixture (o,q,i,g)=(" + fmt(s3.overall_acc) + "," +
              fmt(s3.question_acc) + "," + fmt(s3.image_acc) + "," + fmt(s3.group_acc) + ")"};
}

std::vector<PreferencePair> review_pairs(std::size_t each) {
  std::vector<PreferencePair> out;
  for (auto c : kAllCategories)
    for (std::size_t i = 0; i < each; ++i) {
      PreferencePair p;
      p.id = std::string(to_string(c)) + "-" + std::to_string(i);
      p.category = c;
      p.instruction = "q";
      p.chosen = "chosen " + p.id;
      p.rejected = "rejected " + p.id;
      p.provenance.backend_name = "acceptance";
      p.provenance.new_values = {"x"};
      out.push_back(p);
    }
  return out;
}

/// Child process labels through the store and reports each returned call on
/// a pipe; the parent kills it mid-stream and replays the store from disk.
bool crash_replay(std::size_t& acked_out, std::size_t& persisted_out) {
  testkit::TempDir dir("accept-crash");
  const auto pairs = review_pairs(20);
  std::string id;
  {
    review::SessionStore store(dir.path());
    id = store.create(pairs, 100, {"a", "b", "c"}, 1, "pairs")->session_id;
  }
  int fds[2];
  if (::pipe(fds) != 0) return false;
  const pid_t child = ::fork();
  if (child < 0) return false;
  if (child == 0) {
    ::close(fds[0]);
    review::SessionStore store(dir.path());
    const auto s = store.get(id);
    std::uint32_t k = 0;
    for (const auto& a : s->annotators)
      for (const auto& t : s->tasks) {
        store.label(id, a, t.pair_id, review::Label::HardNegative);
        if (::write(fds[1], &k, sizeof k) != sizeof k) ::_exit(1);
        ++k;
      }
    for (;;) ::pause();
  }
  ::close(fds[1]);
  std::size_t acked = 0;
  std::uint32_t k = 0;
  while (acked < tol::kCrashAcksBeforeKill && ::read(fds[0], &k, sizeof k) == sizeof k) ++acked;
  ::kill(child, SIGKILL);
  // drain acks that raced the kill
  while (::read(fds[0], &k, sizeof k) == sizeof k) ++acked;
  ::close(fds[0]);
  ::waitpid(child, nullptr, 0);

  review::SessionStore replay(dir.path());
  const auto s = replay.get(id);
  acked_out = acked;
  persisted_out = s->labels.size();
  std::size_t i = 0;
  for (const auto& a : s->annotators)
    for (const auto& t : s->tasks) {
      if (i++ >= acked) return true;
      if (!s->label_of(a, t.pair_id)) return false;
    }
  return true;
}

Verdict review_api() {
  const auto pairs = review_pairs(60);
  int bad_orderings = 0;
  for (int seed = 0; seed < tol::kOrderingSeeds; ++seed) {
    const auto s = review::create_session(pairs, 500, {"a", "b", "c"}, static_cast<std::uint64_t>(seed));
    std::map<TaskCategory, int> counts;
    bool ok = s.tasks.size() == 500;
    for (std::size_t i = 0; i < s.tasks.size(); ++i) {
      ++counts[s.tasks[i].category];
      if (i > 0 && s.tasks[i].category == s.tasks[i - 1].category) ok = false;
    }
    for (auto c : kAllCategories) ok = ok && counts[c] == 50;
    bad_orderings += !ok;
  }

  std::size_t acked = 0, persisted = 0;
  const bool replay_ok = crash_replay(acked, persisted);

  auto session = review::create_session(review_pairs(10), 60, {"a", "b", "c"}, 5);
  Rng rng(31);
  std::vector<std::vector<bool>> matrix;
  for (const auto& t : session.tasks) {
    std::vector<bool> row;
    for (const auto& a : session.annotators) {
      const bool hn = rng.below(10) < 8;
      row.push_back(hn);
      review::submit_label(session, a, t.pair_id, hn ? review::Label::HardNegative : review::Label::NotHardNegative);
    }
    matrix.push_back(row);
  }
  const auto st = review::session_stats(session);
  const auto o = oracle::review_tally(matrix);
  const bool stats_ok = st.alignment && st.kappa && std::abs(*st.alignment - o.alignment) <= 1e-12 &&
                        std::abs(*st.kappa - o.kappa) <= tol::kKappaTol;
  return {bad_orderings == 0 && replay_ok && stats_ok,
          std::to_string(tol::kOrderingSeeds - bad_orderings) + "/" + std::to_string(tol::kOrderingSeeds) +
              " seeds ok; crash replay " + (replay_ok ? "kept" : "LOST") + " " + std::to_string(acked) +
              " acked labels (" + std::to_string(persisted) + " on disk); alignment=" +
              fmt(st.alignment.value_or(NAN)) + " kappa=" + fmt(st.kappa.value_or(NAN)) + " oracle=(" +
              fmt(o.alignment) + ", " + fmt(o.kappa) + ")"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"length bias audit", length_bias},
      {"categorization golden", golden_categories},
      {"penalty-list cases", penalty_cases},
      {"mock pipeline determinism", mock_determinism},
      {"dpo math", dpo_math},
      {"dpo dynamics", dynamics},
      {"bootstrap", bootstrap},
      {"fleiss kappa", kappa},
      {"grouped accuracy", grouped},
      {"review api", review_api},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << v.detail
              << std::endl;
  }
  return failed;
}
