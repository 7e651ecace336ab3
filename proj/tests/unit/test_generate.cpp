#include <doctest.h>

#include <fstream>

#include "hardneg/editgen/generate.hpp"
#include "hardneg/editgen/mock.hpp"
#include "hardneg/text.hpp"
#include "support/corpus_gen.hpp"

using namespace hardneg;

namespace {

const std::vector<std::string> kCase2aPenalty = {"yellow", "black", "beige", "teal", "green",
                                                  "burgundy", "sepia", "lavender", "purple", "orange"};
const std::vector<std::string> kCase2cPenalty = {"yellow", "black", "beige", "blue", "green",
                                                  "red", "silver", "lavender", "purple", "orange"};

std::string color_edit(const std::string& colors, const std::string& list) {
  return "New Response: The subway train in the image is " + colors + ".\nNew Colors: " + list;
}
const std::string kGood = color_edit("pink, turquoise, and white", "['pink', 'turquoise', 'white']");
const std::string kBlack = color_edit("pink, black, white", "['pink', 'black', 'white']");
const std::string kYellowGreen = color_edit("yellow, green, white", "['yellow', 'green', 'white']");
const std::string kRed = color_edit("red, turquoise, white", "['red', 'turquoise', 'white']");

TaggedSample subway() {
  TaggedSample t;
  t.sample = testkit::make_sample("subway", "What colors are present on the subway train in the image?",
                                  "The subway train in the image is orange, blue, and silver.");
  t.assignment.tags = {TaskCategory::Color};
  t.assignment.final_category = TaskCategory::Color;
  return t;
}

TaggedSample tagged(const SftSample& s) { return {s, assign_category(instruction_text(s), KeywordRuleset::defaults())}; }

std::vector<json> read_jsonl(const std::filesystem::path& p) {
  std::vector<json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

/// No accepted value was in the category's penalty list when it was accepted.
void check_audit_sound(const std::vector<json>& events) {
  for (const auto& e : events) {
    if (e.value("event", "") != "decision" || e.at("decision") != "accept" || e.at("penalty").is_null()) continue;
    PenaltyList snapshot(*parse_category(e.at("category").get<std::string>()), 100, 100);
    snapshot.set_values(e.at("penalty").get<std::vector<std::string>>());
    CHECK(conflicting_values(e.at("new_values").get<std::vector<std::string>>(), snapshot).empty());
  }
}

}  // namespace

TEST_SUITE("generate") {
  TEST_CASE("validate_pair") {
    PreferencePair p;
    p.id = "x";
    p.category = TaskCategory::Counting;
    p.instruction = "How many planes are visible in the image?";
    p.chosen = "There are four planes visible in the image.";
    p.rejected = "There are six planes visible in the image.";
    p.provenance.new_values = {"six"};
    const auto ok = validate_pair(p);
    CHECK(ok.valid());
    CHECK(ok.ld == 1);
    CHECK(ok.len_delta == 0);

    auto same = p;
    same.rejected = " There are four  planes visible in the image. ";
    CHECK(validate_pair(same).reason == InvalidReason::IdenticalEdit);

    auto noop = p;
    noop.rejected = "There are four planes visible in the whole image.";
    noop.provenance.new_values = {"four"};
    CHECK(validate_pair(noop).reason == InvalidReason::NoOpEdit);

    auto ex = p;
    ex.category = TaskCategory::Existence;
    ex.chosen = "Yes, the batter's ankles are twisted.";
    ex.rejected = "Yes, the batter's ankles are not twisted.";
    CHECK(validate_pair(ex).reason == InvalidReason::PolarityNotFlipped);
    ex.rejected = "No, the batter's ankles are not twisted.";
    CHECK(validate_pair(ex).valid());
  }

  TEST_CASE("multiplicity follows occurrences in the rejected text") {
    CHECK(with_multiplicity({"teal"}, "small teal packages or a teal envelope") ==
          std::vector<std::string>{"teal", "teal"});
    CHECK(with_multiplicity({"pink", "Pink"}, "pink") == std::vector<std::string>{"pink"});
    CHECK(with_multiplicity({"mauve"}, "nothing") == std::vector<std::string>{"mauve"});
  }

  TEST_CASE("triplet subset sizes") {
    std::vector<Triplet> eight;
    for (int i = 0; i < 8; ++i) eight.push_back({"e" + std::to_string(i), Dimension::Color, "p" + std::to_string(i)});
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      Rng rng(seed);
      const auto sub = sample_triplets(eight, rng);
      CHECK(sub.size() >= 4);
      CHECK(sub.size() <= 6);
      CHECK(std::is_sorted(sub.begin(), sub.end(), [](const Triplet& a, const Triplet& b) {
        return a.visual_element < b.visual_element;
      }));
      Rng again(seed);
      CHECK(sample_triplets(eight, again) == sub);
    }
    Rng rng(1);
    CHECK(sample_triplets({eight[0]}, rng).size() == 1);
  }

  TEST_CASE("Case-1: empty penalty list accepts on the first attempt") {
    ScriptedBackend be({{"subway", {kGood}}});
    GenerationLedger ledger(10, 10);
    const auto out = generate_pair(subway(), be, ledger, {1, 7});
    REQUIRE(out.kind == Outcome::Accepted);
    CHECK(out.pair->rejected == "The subway train in the image is pink, turquoise, and white.");
    CHECK(out.pair->provenance.attempts == 1);
    CHECK(out.completions == 1);
    CHECK(ledger.accepted == 1);
  }

  TEST_CASE("Case-2a: a conflict is retried once, then accepted") {
    ScriptedBackend be({{"subway", {kBlack, kGood}}});
    GenerationLedger ledger(10, 10);
    ledger.penalty(TaskCategory::Color).set_values(kCase2aPenalty);
    const auto out = generate_pair(subway(), be, ledger, {1, 7});
    REQUIRE(out.kind == Outcome::Accepted);
    CHECK(out.pair->provenance.attempts == 2);
    CHECK(out.pair->provenance.new_values == std::vector<std::string>{"pink", "turquoise", "white"});
    CHECK(out.completions == 2);
    check_audit_sound(out.audit);
  }

  TEST_CASE("Case-2b: two conflicts requeue the sample") {
    ScriptedBackend be({{"subway", {kBlack, kYellowGreen}}});
    GenerationLedger ledger(10, 10);
    ledger.penalty(TaskCategory::Color).set_values(kCase2aPenalty);
    const auto out = generate_pair(subway(), be, ledger, {1, 7});
    CHECK(out.kind == Outcome::Requeued);
    CHECK(out.reason == "PenaltyConflict: yellow, green");
    CHECK(out.completions == 2);
    CHECK(ledger.requeued == std::vector<std::string>{"subway"});
    CHECK(ledger.accepted == 0);
  }

  TEST_CASE("Case-2c: the next pass sees the refreshed list and accepts") {
    ScriptedBackend be({{"subway", {kBlack, kYellowGreen, kRed, kGood}}});
    GenerationLedger ledger(10, 10);
    ledger.penalty(TaskCategory::Color).set_values(kCase2aPenalty);
    CHECK(generate_pair(subway(), be, ledger, {1, 7}).kind == Outcome::Requeued);
    ledger.penalty(TaskCategory::Color).set_values(kCase2cPenalty);
    const auto out = generate_pair(subway(), be, ledger, {2, 7});
    REQUIRE(out.kind == Outcome::Accepted);
    CHECK(out.pair->provenance.attempts == 2);
    CHECK(be.remaining("subway") == 0);
    check_audit_sound(out.audit);
  }

  TEST_CASE("unparseable output retries, identical output fails") {
    ScriptedBackend junk({{"subway", {"I cannot help with that.", kGood}}});
    GenerationLedger ledger;
    CHECK(generate_pair(subway(), junk, ledger, {1, 1}).kind == Outcome::Accepted);

    ScriptedBackend same({{"subway", {color_edit("orange, blue, and silver", "['orange']")}}});
    const auto out = generate_pair(subway(), same, ledger, {1, 1});
    CHECK(out.kind == Outcome::Failed);
    CHECK(out.reason == "IdenticalEdit");
  }

  TEST_CASE("mock counting sample is accepted on attempt one") {
    MockBackend mock;
    GenerationLedger ledger;
    const auto t = tagged(testkit::make_sample("p", "How many planes are visible in the image?",
                                               "There are four planes visible in the image."));
    const auto out = generate_pair(t, mock, ledger, {1, 3});
    REQUIRE(out.kind == Outcome::Accepted);
    CHECK(out.pair->rejected == "There are six planes visible in the image.");
    CHECK(out.pair->provenance.attempts == 1);
  }

  TEST_CASE("captioning extracts triplets first") {
    MockBackend mock;
    GenerationLedger ledger;
    const auto t = tagged(testkit::make_sample(
        "cap", "Describe the image in detail.",
        "The image shows a green jet flying over tall buildings, with two people standing on the left."));
    const auto out = generate_pair(t, mock, ledger, {1, 4});
    REQUIRE(out.kind == Outcome::Accepted);
    REQUIRE(out.pair->provenance.triplets_used.has_value());
    CHECK_FALSE(out.pair->provenance.triplets_used->empty());
    CHECK(out.completions == 1);

    const auto none = tagged(testkit::make_sample("cap2", "Describe the image.", "It is a photo."));
    const auto failed = generate_pair(none, mock, ledger, {1, 4});
    CHECK(failed.kind == Outcome::Failed);
    CHECK(failed.reason == "NoTriplets");
  }

  TEST_CASE("run: 100 mock samples are all accepted, deterministically") {
    testkit::TempDir dir("gen");
    std::vector<TaggedSample> corpus;
    for (const auto& s : testkit::synth_sft(100, 21)) corpus.push_back(tagged(s));
    MockBackend mock;
    GenerationConfig cfg;
    cfg.seed = 5;
    const GenerationPaths a{dir / "a.jsonl", dir / "af.jsonl", dir / "aa.jsonl", {}};
    const GenerationPaths b{dir / "b.jsonl", dir / "bf.jsonl", dir / "ba.jsonl", {}};
    const auto ra = run_generation(corpus, mock, cfg, a);
    run_generation(corpus, mock, cfg, b);
    CHECK(ra.accepted == 100);
    CHECK(ra.failed == 0);
    CHECK(read_file(a.pairs) == read_file(b.pairs));
    CHECK(read_file(a.audit) == read_file(b.audit));
    check_audit_sound(read_jsonl(a.audit));

    for (const auto& p : load_pairs(a.pairs))
      if (p.category == TaskCategory::Existence)
        CHECK(text::leading_polarity(p.chosen) != text::leading_polarity(p.rejected));
  }

  TEST_CASE("run: requeued sample is accepted on the next pass") {
    testkit::TempDir dir("gen");
    ScriptedBackend be({{"subway", {kBlack, kYellowGreen, kRed, kGood}}});
    GenerationConfig cfg;
    cfg.initial_penalty[TaskCategory::Color] = kCase2aPenalty;
    const GenerationPaths paths{dir / "p.jsonl", dir / "f.jsonl", dir / "a.jsonl", {}};
    const auto r = run_generation({subway()}, be, cfg, paths);
    CHECK(r.accepted == 1);
    CHECK(r.passes == 2);
    // no refresh between passes, so red is clear of the list on pass 2
    CHECK(r.completions == 3);
    CHECK(be.remaining("subway") == 1);
    const auto events = read_jsonl(paths.audit);
    check_audit_sound(events);
    std::vector<std::string> decisions;
    for (const auto& e : events)
      if (e["event"] == "decision") decisions.push_back(e["decision"]);
    CHECK(decisions == std::vector<std::string>{"retry", "requeue", "accept"});
  }

  TEST_CASE("run: an always-conflicting editor ends in the failed sidecar") {
    testkit::TempDir dir("gen");
    std::map<std::string, std::deque<std::string>> script;
    std::vector<TaggedSample> corpus;
    for (int i = 0; i < 5; ++i) {
      auto t = subway();
      t.sample.id = "s" + std::to_string(i);
      corpus.push_back(t);
      script[t.sample.id] = std::deque<std::string>(6, kBlack);
    }
    ScriptedBackend be(script);
    GenerationConfig cfg;
    cfg.initial_penalty[TaskCategory::Color] = kCase2aPenalty;
    const GenerationPaths paths{dir / "p.jsonl", dir / "f.jsonl", dir / "a.jsonl", {}};
    const auto r = run_generation(corpus, be, cfg, paths);
    CHECK(r.accepted == 0);
    CHECK(r.failed == 5);
    CHECK(r.passes == 3);
    CHECK(read_jsonl(paths.failed).size() == 5);
    for (const auto& t : corpus) CHECK(be.calls(t.sample.id) == 6);
    CHECK(r.failure_reasons.at("RequeueLimit") == 5);
  }

  TEST_CASE("run: interrupt and resume gives the same outputs") {
    testkit::TempDir dir("gen");
    std::vector<TaggedSample> corpus;
    for (const auto& s : testkit::synth_sft(120, 8)) corpus.push_back(tagged(s));
    MockBackend mock;
    GenerationConfig cfg;
    cfg.seed = 77;
    cfg.k = 3;
    cfg.cadence = 4;
    cfg.checkpoint_every = 10;
    const GenerationPaths full{dir / "full.jsonl", dir / "full_f.jsonl", dir / "full_a.jsonl", dir / "full.ckpt"};
    run_generation(corpus, mock, cfg, full);

    const GenerationPaths part{dir / "part.jsonl", dir / "part_f.jsonl", dir / "part_a.jsonl", dir / "part.ckpt"};
    auto stopped = cfg;
    stopped.stop_after = 47;
    const auto r1 = run_generation(corpus, mock, stopped, part);
    CHECK(r1.interrupted);
    const auto r2 = run_generation(corpus, mock, cfg, part, true);
    CHECK_FALSE(r2.interrupted);
    CHECK(read_file(full.pairs) == read_file(part.pairs));
    CHECK(read_file(full.failed) == read_file(part.failed));
    CHECK(read_file(full.audit) == read_file(part.audit));

    auto other = cfg;
    other.seed = 78;
    CHECK_THROWS_AS(run_generation(corpus, mock, other, part, true), Error);
  }

  TEST_CASE("ledger state round-trips") {
    GenerationLedger l(4, 2);
    l.accepted = 3;
    l.requeued = {"a"};
    l.failed = {{"b", "IdenticalEdit"}};
    l.penalty(TaskCategory::Color).record_acceptance({"pink"});
    l.penalty(TaskCategory::Color).record_acceptance({"teal"});
    const auto back = GenerationLedger::from_json(l.to_json());
    CHECK(back.to_json() == l.to_json());
  }
}
