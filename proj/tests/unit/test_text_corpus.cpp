#include <doctest.h>

#include <fstream>

#include "hardneg/corpus.hpp"
#include "hardneg/rng.hpp"
#include "hardneg/text.hpp"
#include "support/corpus_gen.hpp"

using namespace hardneg;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

PreferencePair sample_pair(std::string id, std::string chosen, std::string rejected) {
  PreferencePair p;
  p.id = std::move(id);
  p.image_ref = "img.jpg";
  p.category = TaskCategory::Counting;
  p.instruction = "How many planes are visible in the image?";
  p.chosen = std::move(chosen);
  p.rejected = std::move(rejected);
  p.provenance.backend_name = "mock";
  p.provenance.new_values = {"six"};
  return p;
}

}  // namespace

TEST_SUITE("text") {
  TEST_CASE("whitespace normalization and case folding") {
    CHECK(text::normalize_ws("  a \t b\n\nc ") == "a b c");
    CHECK(text::to_lower("HeLLo \xC3\x89") == "hello \xC3\x89");
    CHECK(text::trim("\t x \n") == "x");
  }

  TEST_CASE("edge punctuation is stripped, inner punctuation kept") {
    CHECK(text::strip_punct("\"hello,\"") == "hello");
    CHECK(text::strip_punct("don't.") == "don't");
    CHECK(text::strip_punct("\xE2\x80\x9Cquoted\xE2\x80\x9D") == "quoted");
    CHECK(text::strip_punct("...") == "");
  }

  TEST_CASE("leading polarity") {
    CHECK(text::leading_polarity("Yes, there is a dog.") == text::Polarity::Yes);
    CHECK(text::leading_polarity("  NO. Nothing here") == text::Polarity::No);
    CHECK_FALSE(text::leading_polarity("There is no dog.").has_value());
    CHECK_FALSE(text::leading_polarity("").has_value());
  }

  TEST_CASE("utf-8 validation") {
    CHECK(text::is_valid_utf8("plain"));
    CHECK(text::is_valid_utf8("caf\xC3\xA9"));
    CHECK_FALSE(text::is_valid_utf8("bad \xC3"));
    CHECK_FALSE(text::is_valid_utf8("\xFF"));
  }

  TEST_CASE("rng is reproducible and derive_seed separates streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(derive_seed(1, "x") != derive_seed(1, "y"));
    CHECK(derive_seed(1, std::uint64_t{0}) != derive_seed(2, std::uint64_t{0}));
    Rng r(7);
    for (int i = 0; i < 1000; ++i) {
      const auto v = r.between(-3, 3);
      CHECK(v >= -3);
      CHECK(v <= 3);
      const double u = r.uniform();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
    }
  }
}

TEST_SUITE("corpus") {
  TEST_CASE("one-line SFT file loads one sample") {
    testkit::TempDir dir("corpus");
    write_text(dir / "sft.jsonl",
               R"({"id":"a","image":"a.jpg","conversations":[{"from":"human","value":"<image>\nHow many?"},{"from":"gpt","value":"Two."}]})"
               "\n");
    const auto s = load_sft_corpus(dir / "sft.jsonl");
    REQUIRE(s.size() == 1);
    CHECK(s[0].id == "a");
    CHECK(instruction_text(s[0]) == "How many?");
    CHECK(s[0].response() == "Two.");
  }

  TEST_CASE("empty file gives an empty corpus") {
    testkit::TempDir dir("corpus");
    write_text(dir / "empty.jsonl", "");
    CHECK(load_sft_corpus(dir / "empty.jsonl").empty());
  }

  TEST_CASE("missing conversations is a malformed line with its number") {
    testkit::TempDir dir("corpus");
    write_text(dir / "bad.jsonl",
               R"({"id":"a","conversations":[{"from":"human","value":"q"},{"from":"gpt","value":"r"}]})"
               "\n"
               R"({"id":"b"})"
               "\n");
    const auto r = load_collect<SftSample>(dir / "bad.jsonl", &sft_from_json);
    CHECK(r.records.size() == 1);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].line_no == 2);
    try {
      load_sft_corpus(dir / "bad.jsonl");
      FAIL("expected MalformedLine");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::MalformedLine);
      CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
  }

  TEST_CASE("pairs round-trip byte for byte, including multi-byte text") {
    testkit::TempDir dir("corpus");
    std::vector<PreferencePair> pairs = {
        sample_pair("p1", "There are four planes visible in the image.", "There are six planes visible in the image."),
        sample_pair("p2", "The sign reads \xE2\x80\x9C" "stop\xE2\x80\x9D.", "The sign reads \xE2\x80\x9C" "go\xE2\x80\x9D."),
        sample_pair("p3", "Caf\xC3\xA9 tables: three.", "Caf\xC3\xA9 tables: five."),
    };
    pairs[1].provenance.triplets_used = std::vector<Triplet>{{"sign", Dimension::Color, "stop"}};
    CHECK(write_pairs(dir / "p.jsonl", pairs) == 3);
    const auto back = load_pairs(dir / "p.jsonl");
    CHECK(back == pairs);
    write_pairs(dir / "q.jsonl", back);
    CHECK(read_file(dir / "p.jsonl") == read_file(dir / "q.jsonl"));
  }

  TEST_CASE("pair invariants") {
    CHECK_THROWS_AS(validate(sample_pair("x", "same text", "same  text")), Error);
    auto p = sample_pair("x", "a", "b");
    p.provenance.new_values.clear();
    CHECK_THROWS_AS(validate(p), Error);
    p.category = TaskCategory::Object;
    CHECK_NOTHROW(validate(p));
    p.provenance.attempts = 3;
    CHECK_THROWS_AS(validate(p), Error);
  }

  TEST_CASE("log-prob records") {
    const json good = {{"pair_id", "p"}, {"step", 0}, {"lp_t_w", -1.0}, {"lp_t_l", -2.0}, {"lp_r_w", -1.0}, {"lp_r_l", -2.0}};
    CHECK(logprob_from_json(good).logp_theta_rejected == -2.0);
    auto bad = good;
    bad["lp_t_w"] = 0.5;
    try {
      logprob_from_json(bad);
      FAIL("expected InvariantViolation");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InvariantViolation);
    }
  }

  TEST_CASE("10k log-prob lines keep their order") {
    testkit::TempDir dir("corpus");
    std::vector<LogProbRecord> recs;
    for (int i = 0; i < 10000; ++i) recs.push_back({"p" + std::to_string(i), i % 7, -1.0, -2.0, -1.5, -2.5});
    write_jsonl(dir / "lp.jsonl", recs);
    const auto back = load_logprob_records(dir / "lp.jsonl");
    CHECK(back == recs);
  }

  TEST_CASE("generated pairs survive serialization; corrupted ones are rejected") {
    Rng rng(11);
    testkit::TempDir dir("corpus");
    std::vector<PreferencePair> pairs;
    for (int i = 0; i < 200; ++i) {
      auto p = sample_pair("g" + std::to_string(i), "There are " + std::to_string(rng.below(50)) + " cats.",
                           "There are " + std::to_string(50 + rng.below(50)) + " cats.");
      p.category = kAllCategories[rng.below(10)];
      if (!uses_penalty(p.category) && rng.below(2) == 0) p.provenance.new_values.clear();
      p.provenance.attempts = static_cast<int>(1 + rng.below(2));
      if (rng.below(3) == 0) p.image_ref.reset();
      pairs.push_back(p);
    }
    write_pairs(dir / "g.jsonl", pairs);
    CHECK(load_pairs(dir / "g.jsonl") == pairs);

    for (const auto& p : pairs) {
      auto j = to_json(p);
      j["rejected"] = j["chosen"];
      CHECK_THROWS_AS(pair_from_json(j), Error);
      auto k = to_json(p);
      k["meta"]["attempts"] = 0;
      CHECK_THROWS_AS(pair_from_json(k), Error);
    }
  }

  TEST_CASE("invalid utf-8 is a hard error") {
    testkit::TempDir dir("corpus");
    write_text(dir / "bad.jsonl",
               "{\"id\":\"a\",\"image\":\"a.jpg\",\"conversations\":[{\"from\":\"human\",\"value\":\"q\xFF\"},"
               "{\"from\":\"gpt\",\"value\":\"r\"}]}\n");
    CHECK_THROWS_AS(load_sft_corpus(dir / "bad.jsonl"), Error);
  }
}
