#include "hardneg/editgen/generate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hardneg/editgen/lexicon.hpp"
#include "hardneg/editgen/parse.hpp"
#include "hardneg/editgen/prompts.hpp"
#include "hardneg/metrics.hpp"
#include "hardneg/text.hpp"

namespace hardneg {

std::string_view to_string(InvalidReason r) {
  switch (r) {
    case InvalidReason::IdenticalEdit: return "IdenticalEdit";
    case InvalidReason::PolarityNotFlipped: return "PolarityNotFlipped";
    case InvalidReason::NoOpEdit: return "NoOpEdit";
  }
  return "?";
}

namespace {

// For each rejected token: true when the alignment keeps it equal to a chosen token.
std::vector<bool> kept_positions(const std::vector<std::string>& c, const std::vector<std::string>& r) {
  const std::size_t n = c.size(), m = r.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (c[i - 1] == r[j - 1] ? 0 : 1)});
  std::vector<bool> kept(m, false);
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    if (c[i - 1] == r[j - 1] && d[i][j] == d[i - 1][j - 1]) {
      kept[j - 1] = true;
      --i;
      --j;
    } else if (d[i][j] == d[i - 1][j - 1] + 1) {
      --i;
      --j;
    } else if (d[i][j] == d[i][j - 1] + 1) {
      --j;
    } else {
      --i;
    }
  }
  return kept;
}

bool token_equal(const std::string& a, const std::string& b) {
  if (a == b) return true;
  auto x = lexicon::number_value(a);
  auto y = lexicon::number_value(b);
  return x && y && *x == *y;
}

std::vector<std::size_t> occurrences(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  std::vector<std::size_t> out;
  if (needle.empty() || needle.size() > hay.size()) return out;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < needle.size() && ok; ++k) ok = token_equal(hay[i + k], needle[k]);
    if (ok) out.push_back(i);
  }
  return out;
}

}  // namespace

Validity validate_pair(const PreferencePair& p) {
  Validity v;
  const auto c = word_tokens(p.chosen);
  const auto r = word_tokens(p.rejected);
  v.ld = levenshtein(c, r);
  v.len_delta = static_cast<std::int64_t>(r.size()) - static_cast<std::int64_t>(c.size());

  if (text::normalize_ws(p.chosen) == text::normalize_ws(p.rejected)) {
    v.reason = InvalidReason::IdenticalEdit;
    return v;
  }
  if (p.category == TaskCategory::Existence) {
    auto a = text::leading_polarity(p.chosen);
    auto b = text::leading_polarity(p.rejected);
    if (!a || !b || *a == *b) {
      v.reason = InvalidReason::PolarityNotFlipped;
      return v;
    }
  }
  if (p.category == TaskCategory::Color || p.category == TaskCategory::Counting) {
    const auto kept = kept_positions(c, r);
    for (const auto& value : p.provenance.new_values) {
      const auto hits = occurrences(r, word_tokens(value));
      const auto len = word_tokens(value).size();
      if (hits.empty()) continue;
      const bool all_kept = std::all_of(hits.begin(), hits.end(), [&](std::size_t h) {
        for (std::size_t k = 0; k < len; ++k)
          if (!kept[h + k]) return false;
        return true;
      });
      if (all_kept) {
        v.reason = InvalidReason::NoOpEdit;
        return v;
      }
    }
  }
  return v;
}

// ---------------------------------------------------------------------------

PenaltyList& GenerationLedger::penalty(TaskCategory c) {
  auto it = penalties.find(c);
  if (it == penalties.end()) it = penalties.emplace(c, PenaltyList(c, capacity, cadence)).first;
  return it->second;
}

json GenerationLedger::to_json() const {
  json pen = json::object();
  for (const auto& [c, p] : penalties) pen[std::string(hardneg::to_string(c))] = p.state();
  json failed_j = json::array();
  for (const auto& [id, reason] : failed) failed_j.push_back({{"id", id}, {"reason", reason}});
  return {{"accepted", accepted}, {"requeued", requeued}, {"failed", failed_j},
          {"capacity", capacity}, {"cadence", cadence},   {"penalties", pen}};
}

GenerationLedger GenerationLedger::from_json(const json& j) {
  GenerationLedger l(j.at("capacity").get<std::size_t>(), j.at("cadence").get<std::size_t>());
  l.accepted = j.at("accepted").get<std::size_t>();
  l.requeued = j.at("requeued").get<std::vector<std::string>>();
  for (const auto& f : j.at("failed")) l.failed.emplace_back(f.at("id").get<std::string>(), f.at("reason").get<std::string>());
  for (const auto& [name, state] : j.at("penalties").items()) {
    auto p = PenaltyList::from_state(state);
    l.penalties.emplace(p.category(), std::move(p));
  }
  return l;
}

void record_acceptance(GenerationLedger& ledger, TaskCategory category, const std::vector<std::string>& new_values) {
  ledger.penalty(category).record_acceptance(new_values);
}

std::vector<std::string> with_multiplicity(const std::vector<std::string>& values, std::string_view rejected) {
  const auto toks = word_tokens(rejected);
  std::vector<std::string> seen, out;
  for (const auto& raw : values) {
    auto v = normalize_value(raw);
    if (v.empty() || std::find(seen.begin(), seen.end(), v) != seen.end()) continue;
    seen.push_back(v);
    const auto n = std::max<std::size_t>(1, occurrences(toks, word_tokens(v)).size());
    out.insert(out.end(), n, v);
  }
  return out;
}

// ---------------------------------------------------------------------------

TripletExtraction extract_triplets(const SftSample& sample, EditorBackend& backend, const EditRequest& base) {
  TripletExtraction ex;
  EditRequest req = base;
  req.stage = EditStage::ExtractTriplets;
  req.prompt = build_triplet_prompt(instruction_text(sample), sample.response());
  ex.prompt = req.prompt;
  ex.raw = backend.complete(req);
  auto parsed = parse_triplets(ex.raw);
  ex.unknown_dimension = parsed.unknown_dimension;
  const std::string hay = text::to_lower(text::normalize_ws(sample.response()));
  for (auto& t : parsed.triplets) {
    if (hay.find(text::to_lower(t.phrase)) == std::string::npos) {
      ++ex.dropped_not_substring;
      continue;
    }
    ex.triplets.push_back(std::move(t));
  }
  return ex;
}

std::vector<Triplet> sample_triplets(const std::vector<Triplet>& triplets, Rng& rng) {
  const std::size_t n = triplets.size();
  if (n == 0) return {};
  const double u = 0.5 + 0.25 * rng.uniform();
  auto k = static_cast<std::size_t>(std::llround(u * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<Triplet> out;
  for (auto i : idx) out.push_back(triplets[i]);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

const char* stage_name(EditStage s) { return s == EditStage::Edit ? "edit" : "triplets"; }

json completion_event(const std::string& id, int pass, int attempt, EditStage stage, const std::string& prompt,
                      const std::string& raw) {
  return {{"event", "completion"}, {"sample_id", id}, {"pass", pass},   {"attempt", attempt},
          {"stage", stage_name(stage)}, {"prompt", prompt}, {"raw", raw}};
}

}  // namespace

GenerationOutcome generate_pair(const TaggedSample& tagged, EditorBackend& backend, GenerationLedger& ledger,
                                const PairContext& ctx) {
  GenerationOutcome out;
  const auto category = tagged.category();
  const auto& s = tagged.sample;
  const std::string instruction = instruction_text(s);
  const std::string& response = s.response();
  PenaltyList* pen = uses_penalty(category) ? &ledger.penalty(category) : nullptr;

  auto decision = [&](const char* what, int attempt, const std::string& reason, const std::vector<std::string>& values) {
    json e = {{"event", "decision"}, {"sample_id", s.id}, {"category", to_string(category)}, {"pass", ctx.pass},
              {"attempt", attempt},  {"decision", what}};
    if (!reason.empty()) e["reason"] = reason;
    e["penalty"] = pen ? json(pen->values()) : json(nullptr);
    e["new_values"] = values;
    out.audit.push_back(std::move(e));
  };
  auto fail = [&](int attempt, const std::string& reason) {
    out.kind = Outcome::Failed;
    out.reason = reason;
    ledger.failed.emplace_back(s.id, reason);
    decision("fail", attempt, reason, {});
    return out;
  };

  EditRequest base;
  base.category = category;
  base.sample_id = s.id;
  base.instruction = instruction;
  base.response = response;
  base.pass = ctx.pass;

  std::vector<Triplet> pool;
  if (category == TaskCategory::Captioning) {
    base.seed = derive_seed(ctx.seed, "triplets");
    TripletExtraction ex;
    try {
      ex = extract_triplets(s, backend, base);
    } catch (const Error& e) {
      if (e.code() == Errc::Backend) return fail(0, std::string("BackendError: ") + e.what());
      if (e.code() == Errc::UnparseableOutput) return fail(0, "UnparseableOutput");
      if (e.code() == Errc::NoEditableSpan) return fail(0, "NoTriplets");
      throw;
    }
    out.audit.push_back(completion_event(s.id, ctx.pass, 0, EditStage::ExtractTriplets, ex.prompt, ex.raw));
    if (ex.triplets.empty()) return fail(0, "NoTriplets");
    // steer away from dimensions on the penalty list while any alternative remains
    for (const auto& t : ex.triplets) {
      const auto& vals = pen->values();
      if (std::find(vals.begin(), vals.end(), std::string(to_string(t.dimension))) == vals.end()) pool.push_back(t);
    }
    if (pool.empty()) pool = ex.triplets;
  }

  int unparseable = 0;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    EditRequest req = base;
    req.stage = EditStage::Edit;
    req.attempt = attempt;
    req.seed = derive_seed(ctx.seed, static_cast<std::uint64_t>(attempt));
    if (pen) req.penalty = pen->values();
    if (category == TaskCategory::Captioning) {
      Rng rng(derive_seed(ctx.seed, "sample-triplets:" + std::to_string(attempt)));
      req.triplets = sample_triplets(pool, rng);
    }
    req.prompt = build_prompt(category, instruction, response, pen, req.triplets ? &*req.triplets : nullptr);

    std::string raw;
    try {
      raw = backend.complete(req);
    } catch (const Error& e) {
      if (e.code() == Errc::Backend) return fail(attempt, std::string("BackendError: ") + e.what());
      if (e.code() == Errc::NoEditableSpan || e.code() == Errc::PenaltyExhausted)
        return fail(attempt, std::string(errc_name(e.code())));
      throw;
    }
    ++out.completions;
    out.audit.push_back(completion_event(s.id, ctx.pass, attempt, EditStage::Edit, req.prompt, raw));

    EditResult er;
    try {
      er = parse_edit_response(category, raw);
    } catch (const Error& e) {
      if (e.code() != Errc::UnparseableOutput && e.code() != Errc::EmptyEdit) throw;
      ++unparseable;
      if (attempt < 2) {
        decision("retry", attempt, std::string(errc_name(e.code())), {});
        continue;
      }
      if (unparseable == 2) return fail(attempt, std::string(errc_name(e.code())));
      out.kind = Outcome::Requeued;
      out.reason = errc_name(e.code());
      ledger.requeued.push_back(s.id);
      decision("requeue", attempt, out.reason, {});
      return out;
    }
    if (category == TaskCategory::Captioning) {
      er.new_values.clear();
      for (const auto& t : *req.triplets) er.new_values.emplace_back(to_string(t.dimension));
    }

    if (pen) {
      auto clash = conflicting_values(er.new_values, *pen);
      if (!clash.empty()) {
        const std::string reason = "PenaltyConflict: " + text::join(clash, ", ");
        if (attempt < 2) {
          decision("retry", attempt, reason, er.new_values);
          continue;
        }
        out.kind = Outcome::Requeued;
        out.reason = reason;
        ledger.requeued.push_back(s.id);
        decision("requeue", attempt, reason, er.new_values);
        return out;
      }
    }

    PreferencePair pair;
    pair.id = s.id;
    pair.image_ref = s.image_ref;
    pair.category = category;
    pair.instruction = instruction;
    pair.chosen = response;
    pair.rejected = er.rejected;
    if (category == TaskCategory::Existence && er.revised_chosen &&
        text::normalize_ws(*er.revised_chosen) != text::normalize_ws(response)) {
      pair.chosen = *er.revised_chosen;
      pair.provenance.revised_chosen = true;
    }
    pair.provenance.backend_name = backend.name();
    pair.provenance.attempts = attempt;
    pair.provenance.new_values = er.new_values;
    if (req.triplets) pair.provenance.triplets_used = *req.triplets;

    const auto validity = validate_pair(pair);
    if (!validity.valid()) return fail(attempt, std::string(to_string(*validity.reason)));
    pair.provenance.word_ld = validity.ld;
    pair.provenance.len_delta = validity.len_delta;
    validate(pair);

    decision("accept", attempt, "", er.new_values);
    const auto counted = category == TaskCategory::Captioning ? er.new_values : with_multiplicity(er.new_values, er.rejected);
    if (pen) record_acceptance(ledger, category, counted);
    ++ledger.accepted;
    out.kind = Outcome::Accepted;
    out.pair = std::move(pair);
    return out;
  }
  return out;  // unreachable: every path through attempt 2 returns
}

// ---------------------------------------------------------------------------

namespace {

struct RunState {
  int pass = 1;
  std::vector<std::size_t> order;
  std::size_t pos = 0;
  std::vector<std::size_t> requeued_idx;
  GenerationLedger ledger;
  std::size_t processed = 0;
  std::size_t completions = 0;
  std::map<std::string, std::size_t> failure_reasons;
  std::map<TaskCategory, std::size_t> accepted_by_category;
  bool done = false;
};

std::uintmax_t size_or_zero(const std::filesystem::path& p) {
  std::error_code ec;
  auto n = std::filesystem::file_size(p, ec);
  return ec ? 0 : n;
}

json fingerprint(const GenerationConfig& cfg, std::size_t n) {
  return {{"seed", cfg.seed},           {"k", cfg.k},     {"cadence", cfg.cadence}, {"max_passes", cfg.max_passes},
          {"shuffle", cfg.shuffle},     {"input_size", n}};
}

json state_json(const RunState& st, const GenerationConfig& cfg, std::size_t n, const GenerationPaths& paths) {
  json by_cat = json::object();
  for (const auto& [c, k] : st.accepted_by_category) by_cat[std::string(to_string(c))] = k;
  return {{"version", 1},
          {"config", fingerprint(cfg, n)},
          {"pass", st.pass},
          {"order", st.order},
          {"pos", st.pos},
          {"requeued_idx", st.requeued_idx},
          {"ledger", st.ledger.to_json()},
          {"processed", st.processed},
          {"completions", st.completions},
          {"failure_reasons", st.failure_reasons},
          {"accepted_by_category", by_cat},
          {"done", st.done},
          {"offsets",
           {{"pairs", size_or_zero(paths.pairs)},
            {"failed", size_or_zero(paths.failed)},
            {"audit", paths.audit.empty() ? 0 : size_or_zero(paths.audit)}}}};
}

RunState state_from_json(const json& j) {
  RunState st;
  st.pass = j.at("pass").get<int>();
  st.order = j.at("order").get<std::vector<std::size_t>>();
  st.pos = j.at("pos").get<std::size_t>();
  st.requeued_idx = j.at("requeued_idx").get<std::vector<std::size_t>>();
  st.ledger = GenerationLedger::from_json(j.at("ledger"));
  st.processed = j.at("processed").get<std::size_t>();
  st.completions = j.at("completions").get<std::size_t>();
  st.failure_reasons = j.at("failure_reasons").get<std::map<std::string, std::size_t>>();
  for (const auto& [name, k] : j.at("accepted_by_category").items())
    if (auto c = parse_category(name)) st.accepted_by_category[*c] = k.get<std::size_t>();
  st.done = j.at("done").get<bool>();
  return st;
}

void truncate_to(const std::filesystem::path& p, std::uintmax_t size) {
  if (p.empty()) return;
  if (!std::filesystem::exists(p)) {
    if (size != 0) throw Error(Errc::Io, "checkpoint refers to missing file " + p.string());
    std::ofstream(p, std::ios::binary);
    return;
  }
  if (std::filesystem::file_size(p) < size) throw Error(Errc::Io, p.string() + " is shorter than its checkpoint offset");
  std::filesystem::resize_file(p, size);
}

std::string reason_key(const std::string& reason) {
  auto colon = reason.find(':');
  return colon == std::string::npos ? reason : reason.substr(0, colon);
}

std::ofstream open_append(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary | std::ios::app);
  if (!f) throw Error(Errc::Io, "cannot open " + p.string());
  return f;
}

}  // namespace

json GenerationReport::to_json() const {
  json by_cat = json::object();
  for (const auto& [c, k] : accepted_by_category) by_cat[std::string(hardneg::to_string(c))] = k;
  return {{"input", input},         {"accepted", accepted},
          {"failed", failed},       {"passes", passes},
          {"completions", completions}, {"interrupted", interrupted},
          {"failure_reasons", failure_reasons}, {"accepted_by_category", by_cat},
          {"penalties", ledger.to_json().at("penalties")}};
}

GenerationReport run_generation(const std::vector<TaggedSample>& corpus, EditorBackend& backend,
                                const GenerationConfig& cfg, const GenerationPaths& paths, bool resume) {
  if (cfg.max_passes < 1) throw Error(Errc::Config, "max_passes must be >= 1");
  if (cfg.k < 1) throw Error(Errc::Config, "penalty capacity must be >= 1");
  const std::size_t n = corpus.size();

  auto start_pass = [&](RunState& st, int pass, std::vector<std::size_t> idx) {
    if (cfg.shuffle) {
      Rng rng(derive_seed(cfg.seed, "pass:" + std::to_string(pass)));
      rng.shuffle(idx);
    }
    st.pass = pass;
    st.order = std::move(idx);
    st.pos = 0;
  };

  RunState st;
  const bool have_checkpoint = !paths.checkpoint.empty() && std::filesystem::exists(paths.checkpoint);
  if (resume && have_checkpoint) {
    json j;
    try {
      j = json::parse(read_file(paths.checkpoint));
    } catch (const json::parse_error& e) {
      throw Error(Errc::Io, "unreadable checkpoint: " + std::string(e.what()));
    }
    if (j.at("config") != fingerprint(cfg, n))
      throw Error(Errc::Config, "checkpoint was written with a different seed, config or input");
    st = state_from_json(j);
    const auto& off = j.at("offsets");
    truncate_to(paths.pairs, off.at("pairs").get<std::uintmax_t>());
    truncate_to(paths.failed, off.at("failed").get<std::uintmax_t>());
    truncate_to(paths.audit, off.at("audit").get<std::uintmax_t>());
  } else {
    st.ledger = GenerationLedger(cfg.k, cfg.cadence);
    for (const auto& [c, values] : cfg.initial_penalty) st.ledger.penalty(c).set_values(values);
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    start_pass(st, 1, std::move(all));
    truncate_to(paths.pairs, 0);
    truncate_to(paths.failed, 0);
    truncate_to(paths.audit, 0);
  }

  auto pairs_out = open_append(paths.pairs);
  auto failed_out = open_append(paths.failed);
  std::ofstream audit_out;
  if (!paths.audit.empty()) audit_out = open_append(paths.audit);

  auto flush_all = [&] {
    pairs_out.flush();
    failed_out.flush();
    if (audit_out.is_open()) audit_out.flush();
    if (!pairs_out || !failed_out) throw Error(Errc::Io, "write failed");
  };
  auto check_conservation = [&] {
    const std::size_t pending = st.order.size() - st.pos;
    const std::size_t total = st.ledger.accepted + st.ledger.requeued.size() + st.ledger.failed.size() + pending;
    if (total != n)
      throw Error(Errc::InvariantViolation, "ledger accounting broke: " + std::to_string(total) + " != " + std::to_string(n));
  };
  auto save = [&] {
    flush_all();
    check_conservation();
    if (!paths.checkpoint.empty()) atomic_write(paths.checkpoint, state_json(st, cfg, n, paths).dump());
  };
  auto write_failed = [&](const TaggedSample& t, const std::string& reason) {
    json j = to_json(t);
    j["reason"] = reason;
    j["pass"] = st.pass;
    failed_out << dump_line(j) << '\n';
    ++st.failure_reasons[reason_key(reason)];
  };

  GenerationReport report;
  report.input = n;
  std::size_t processed_now = 0;

  while (!st.done) {
    while (st.pos < st.order.size()) {
      if (cfg.stop_after && processed_now >= *cfg.stop_after) {
        flush_all();
        report.interrupted = true;
        report.accepted = st.ledger.accepted;
        report.failed = st.ledger.failed.size();
        report.passes = st.pass;
        report.completions = st.completions;
        report.ledger = st.ledger;
        return report;
      }
      const std::size_t idx = st.order[st.pos];
      const auto& sample = corpus[idx];
      PairContext ctx;
      ctx.pass = st.pass;
      ctx.seed = derive_seed(derive_seed(cfg.seed, "sample:" + sample.sample.id), static_cast<std::uint64_t>(st.pass));
      auto res = generate_pair(sample, backend, st.ledger, ctx);
      st.completions += static_cast<std::size_t>(res.completions);
      if (audit_out.is_open())
        for (const auto& e : res.audit) audit_out << dump_line(e) << '\n';
      switch (res.kind) {
        case Outcome::Accepted:
          pairs_out << dump_line(to_json(*res.pair)) << '\n';
          ++st.accepted_by_category[sample.category()];
          break;
        case Outcome::Failed: write_failed(sample, res.reason); break;
        case Outcome::Requeued: st.requeued_idx.push_back(idx); break;
      }
      ++st.pos;
      ++st.processed;
      ++processed_now;
      if (cfg.checkpoint_every > 0 && st.processed % cfg.checkpoint_every == 0) save();
    }

    if (st.requeued_idx.empty()) {
      st.done = true;
    } else if (st.pass >= cfg.max_passes) {
      for (auto idx : st.requeued_idx) {
        const std::string reason = "RequeueLimit: still conflicting after " + std::to_string(cfg.max_passes) + " passes";
        write_failed(corpus[idx], reason);
        st.ledger.failed.emplace_back(corpus[idx].sample.id, reason);
      }
      st.ledger.requeued.clear();
      st.requeued_idx.clear();
      st.done = true;
    } else {
      auto next = std::move(st.requeued_idx);
      st.requeued_idx.clear();
      st.ledger.requeued.clear();
      start_pass(st, st.pass + 1, std::move(next));
    }
    save();
  }

  report.accepted = st.ledger.accepted;
  report.failed = st.ledger.failed.size();
  report.passes = st.pass;
  report.completions = st.completions;
  report.failure_reasons = st.failure_reasons;
  report.accepted_by_category = st.accepted_by_category;
  report.ledger = st.ledger;
  return report;
}

}  // namespace hardneg
