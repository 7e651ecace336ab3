#include <doctest.h>

#include "hardneg/metrics.hpp"
#include "hardneg/rng.hpp"
#include "support/oracles.hpp"

using namespace hardneg;

namespace {

// Frozen from tests/oracle/ld_oracle.py over tests/data/fixture_pairs.jsonl.
constexpr std::size_t kFixtureCount = 60;
constexpr std::size_t kFixtureSumLd = 413;
constexpr std::size_t kFixtureSumAbsDelta = 187;
constexpr std::size_t kFixtureChosenLonger = 13;
constexpr std::size_t kFixtureRejectedLonger = 25;

PreferencePair make_pair(std::string chosen, std::string rejected) {
  PreferencePair p;
  p.id = "p";
  p.instruction = "q";
  p.chosen = std::move(chosen);
  p.rejected = std::move(rejected);
  p.provenance.backend_name = "test";
  return p;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("tokenizer") {
    CHECK(word_tokens("There are FOUR planes, visible.") ==
          std::vector<std::string>{"there", "are", "four", "planes", "visible"});
    CHECK(word_tokens(" -- ... ").empty());
  }

  TEST_CASE("planes pair") {
    const auto s = pair_stats("There are four planes visible in the image.", "There are six planes visible in the image.");
    CHECK(s.ld == 1);
    CHECK(s.len_delta == 0);
    CHECK(s.longer == Longer::Equal);
    CHECK(s.bucket == Bucket::Short);
  }

  TEST_CASE("small cases") {
    CHECK(word_levenshtein("", "") == 0);
    CHECK(word_levenshtein("a b c", "") == 3);
    const auto s = pair_stats("one two three four five", "one two three four five six seven eight nine");
    CHECK(s.longer == Longer::Rejected);
    CHECK(s.len_delta == 4);
  }

  TEST_CASE("levenshtein agrees with the full-matrix oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<std::string> a, b;
      for (std::size_t i = 0; i < rng.below(15); ++i) a.push_back(std::string(1, static_cast<char>('a' + rng.below(4))));
      for (std::size_t i = 0; i < rng.below(15); ++i) b.push_back(std::string(1, static_cast<char>('a' + rng.below(4))));
      const auto d = levenshtein(a, b);
      CHECK(d == oracle::levenshtein(a, b));
      CHECK(d == levenshtein(b, a));
      const auto lo = a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
      CHECK(d >= lo);
      CHECK(d <= std::max(a.size(), b.size()));
    }
  }

  TEST_CASE("two rejected-longer pairs split (0, 100)") {
    const auto r = dataset_report({make_pair("a b", "a b c"), make_pair("x", "x y z")});
    CHECK(*r.overall.pct_chosen_longer() == 0.0);
    CHECK(*r.overall.pct_rejected_longer() == 100.0);
  }

  TEST_CASE("bands and merging") {
    std::string long_text;
    for (int i = 0; i < 120; ++i) long_text += "w" + std::to_string(i) + " ";
    BiasReport r;
    r.add(pair_stats("a b c", "a b"));
    r.add(pair_stats(long_text, long_text + "extra"));
    CHECK(r.short_band.count + r.long_band.count == r.overall.count);
    CHECK(r.long_band.count == 1);

    BandStats x, y, all;
    x.add(pair_stats("a", "b c"));
    y.add(pair_stats("a b c", "a"));
    all.add(pair_stats("a", "b c"));
    all.add(pair_stats("a b c", "a"));
    x.merge(y);
    CHECK(x == all);
    CHECK_THROWS_AS(dataset_report({}), Error);
  }

  TEST_CASE("report json round-trip and text layout") {
    const auto r = dataset_report({make_pair("a b c", "a b d e")}, "tiny");
    const auto back = bias_report_from_json(to_json(r));
    CHECK(back.overall == r.overall);
    CHECK(back.name == "tiny");
    const auto table = format_report(r);
    CHECK(table.find("tiny") != std::string::npos);
    CHECK(compare_reports({r, dataset_report({make_pair("a", "b")}, "other")}).lowest_ld == 1);
    CHECK_THROWS_AS(compare_reports({r}), Error);
  }

  TEST_CASE("fixture values match the frozen oracle") {
    const auto r = dataset_report(load_pairs(std::filesystem::path(HARDNEG_TEST_DATA) / "fixture_pairs.jsonl"));
    CHECK(r.overall.count == kFixtureCount);
    CHECK(r.overall.sum_ld == kFixtureSumLd);
    CHECK(r.overall.sum_abs_delta == kFixtureSumAbsDelta);
    CHECK(r.overall.chosen_longer == kFixtureChosenLonger);
    CHECK(r.overall.rejected_longer == kFixtureRejectedLonger);
  }

  TEST_CASE("display rounding") {
    CHECK(round_display(2.5) == 3);
    CHECK(round_display(-2.5) == -3);
    CHECK(round_display(2.49) == 2);
  }
}
