#include "hardneg/dpo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>

#include "hardneg/rng.hpp"

namespace hardneg::dpo {

void DpoConfig::check() const {
  if (!(alpha > 0) || !std::isfinite(alpha)) throw Error(Errc::Config, "alpha must be positive");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw Error(Errc::Config, "learning rate must be positive");
  if (steps < 0) throw Error(Errc::Config, "steps must be >= 0");
}

PolicyParams PolicyParams::uniform(std::vector<std::string> vocab) {
  PolicyParams p;
  p.logits.assign(vocab.size(), 0.0);
  p.vocab = std::move(vocab);
  return p;
}

std::size_t PolicyParams::index_of(const std::string& token) const {
  auto it = std::find(vocab.begin(), vocab.end(), token);
  if (it == vocab.end()) throw Error(Errc::UnknownToken, "token not in vocab: " + token);
  return static_cast<std::size_t>(it - vocab.begin());
}

double PolicyParams::log_normalizer() const {
  if (logits.empty()) throw Error(Errc::VocabTooSmall, "empty vocab");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double s = 0;
  for (double z : logits) s += std::exp(z - mx);
  return mx + std::log(s);
}

std::vector<double> PolicyParams::probabilities() const {
  const double lse = log_normalizer();
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) p[i] = std::exp(logits[i] - lse);
  return p;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double neg_log_sigmoid(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(-x, 0.0); }

double preference_probability(double reward_w, double reward_l) { return sigmoid(reward_w - reward_l); }

double dpo_loss(double delta_theta, double delta_ref, double alpha) {
  return neg_log_sigmoid(alpha * (delta_theta - delta_ref));
}

namespace {

// Lookup table for a policy's vocab; index_of is linear.
class VocabIndex {
 public:
  explicit VocabIndex(const std::vector<std::string>& vocab) {
    for (std::size_t i = 0; i < vocab.size(); ++i) map_.emplace(vocab[i], i);
  }
  std::size_t operator()(const std::string& t) const {
    auto it = map_.find(t);
    if (it == map_.end()) throw Error(Errc::UnknownToken, "token not in vocab: " + t);
    return it->second;
  }

 private:
  std::unordered_map<std::string, std::size_t> map_;
};

double seq_logprob_indexed(const PolicyParams& policy, const VocabIndex& idx, double lse,
                           const std::vector<std::string>& tokens) {
  double s = 0;
  for (const auto& t : tokens) s += policy.logits[idx(t)] - lse;
  return s;
}

void check_shared_vocab(const PolicyParams& a, const PolicyParams& b) {
  if (a.vocab != b.vocab) throw Error(Errc::UnknownToken, "policy and reference vocabularies differ");
}

}  // namespace

double seq_logprob(const PolicyParams& policy, const std::vector<std::string>& tokens) {
  return seq_logprob_indexed(policy, VocabIndex(policy.vocab), policy.log_normalizer(), tokens);
}

DeltaRecord deltas(const PolicyParams& policy, const PolicyParams& reference, const TokenizedPair& pair, double alpha) {
  check_shared_vocab(policy, reference);
  VocabIndex idx(policy.vocab);
  const double lse_t = policy.log_normalizer();
  const double lse_r = reference.log_normalizer();
  DeltaRecord d;
  d.pair_id = pair.id;
  d.delta_theta = seq_logprob_indexed(policy, idx, lse_t, pair.chosen) - seq_logprob_indexed(policy, idx, lse_t, pair.rejected);
  d.delta_ref =
      seq_logprob_indexed(reference, idx, lse_r, pair.chosen) - seq_logprob_indexed(reference, idx, lse_r, pair.rejected);
  d.margin = d.delta_theta - d.delta_ref;
  d.loss = neg_log_sigmoid(alpha * d.margin);
  return d;
}

DeltaRecord deltas(const LogProbRecord& r, double alpha) {
  DeltaRecord d;
  d.pair_id = r.pair_id;
  d.delta_theta = r.logp_theta_chosen - r.logp_theta_rejected;
  d.delta_ref = r.logp_ref_chosen - r.logp_ref_rejected;
  d.margin = d.delta_theta - d.delta_ref;
  d.loss = neg_log_sigmoid(alpha * d.margin);
  return d;
}

double reward_accuracy(const std::vector<DeltaRecord>& records) {
  if (records.empty()) throw Error(Errc::EmptyInput, "reward accuracy of no records");
  const auto hits = std::count_if(records.begin(), records.end(), [](const DeltaRecord& d) { return d.margin > 0; });
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

// ---------------------------------------------------------------------------

CompiledPair compile(const PolicyParams& reference, const TokenizedPair& pair) {
  return compile(reference, std::vector<TokenizedPair>{pair}).front();
}

std::vector<CompiledPair> compile(const PolicyParams& reference, const std::vector<TokenizedPair>& pairs) {
  VocabIndex idx(reference.vocab);
  const double lse = reference.log_normalizer();
  std::vector<CompiledPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    std::map<std::size_t, double> diff;
    for (const auto& t : p.chosen) diff[idx(t)] += 1;
    for (const auto& t : p.rejected) diff[idx(t)] -= 1;
    CompiledPair c;
    for (const auto& [i, v] : diff)
      if (v != 0) c.count_diff.emplace_back(i, v);
    c.len_diff = static_cast<double>(p.chosen.size()) - static_cast<double>(p.rejected.size());
    c.delta_ref = delta_theta(reference.logits, lse, c);
    out.push_back(std::move(c));
  }
  return out;
}

double delta_theta(const std::vector<double>& logits, double lse, const CompiledPair& p) {
  double s = 0;
  for (const auto& [i, v] : p.count_diff) s += v * logits[i];
  return s - p.len_diff * lse;
}

namespace {

struct Eval {
  double loss = 0;
  double acc = 0;
  double mean_dt = 0;
  double mean_dr = 0;
  std::vector<double> grad;
};

// Fixed summation order over `pairs` keeps results bit-reproducible.
Eval evaluate(const std::vector<double>& logits, const std::vector<CompiledPair>& pairs,
              const std::vector<std::size_t>& batch, double alpha, bool want_grad) {
  PolicyParams tmp;
  tmp.logits = logits;
  const double lse = tmp.log_normalizer();
  const auto p = tmp.probabilities();
  Eval e;
  if (want_grad) e.grad.assign(logits.size(), 0.0);
  double p_coef = 0;  // accumulated coefficient on the softmax term
  std::size_t hits = 0;
  for (auto i : batch) {
    const auto& cp = pairs[i];
    const double dt = delta_theta(logits, lse, cp);
    const double m = dt - cp.delta_ref;
    e.loss += neg_log_sigmoid(alpha * m);
    e.mean_dt += dt;
    e.mean_dr += cp.delta_ref;
    if (m > 0) ++hits;
    if (want_grad) {
      const double w = -alpha * sigmoid(-alpha * m);
      for (const auto& [k, v] : cp.count_diff) e.grad[k] += w * v;
      p_coef -= w * cp.len_diff;
    }
  }
  const double n = static_cast<double>(batch.size());
  e.loss /= n;
  e.mean_dt /= n;
  e.mean_dr /= n;
  e.acc = static_cast<double>(hits) / n;
  if (want_grad)
    for (std::size_t k = 0; k < e.grad.size(); ++k) e.grad[k] = (e.grad[k] + p_coef * p[k]) / n;
  return e;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

double batch_loss(const PolicyParams& policy, const PolicyParams& reference, const std::vector<TokenizedPair>& batch,
                  double alpha) {
  if (batch.empty()) throw Error(Errc::EmptyInput, "empty batch");
  check_shared_vocab(policy, reference);
  const auto cps = compile(reference, batch);
  return evaluate(policy.logits, cps, iota(cps.size()), alpha, false).loss;
}

std::vector<double> grad_dpo(const PolicyParams& policy, const PolicyParams& reference,
                             const std::vector<TokenizedPair>& batch, double alpha) {
  if (batch.empty()) throw Error(Errc::EmptyInput, "empty batch");
  check_shared_vocab(policy, reference);
  const auto cps = compile(reference, batch);
  return evaluate(policy.logits, cps, iota(cps.size()), alpha, true).grad;
}

// ---------------------------------------------------------------------------

std::string_view to_string(SynthKind k) {
  switch (k) {
    case SynthKind::LengthBiased: return "length_biased";
    case SynthKind::ConflictingHardNegative: return "hard_negative";
    case SynthKind::Duplicate: return "duplicate";
  }
  return "?";
}

std::optional<SynthKind> parse_synth_kind(std::string_view s) {
  for (auto k : {SynthKind::LengthBiased, SynthKind::ConflictingHardNegative, SynthKind::Duplicate})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

namespace {

std::string content_token(std::size_t i) { return "w" + std::to_string(i); }
std::string verbose_token(std::size_t i) { return "v" + std::to_string(i); }

std::vector<std::string> random_text(Rng& rng, const SynthConfig& cfg) {
  const auto len = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(cfg.min_len),
                                                        static_cast<std::int64_t>(cfg.max_len)));
  std::vector<std::string> t(len);
  for (auto& tok : t) tok = content_token(rng.below(cfg.vocab_size));
  return t;
}

// Replace one position with a token from `pool` that differs from the original.
std::vector<std::string> one_token_swap(Rng& rng, const std::vector<std::string>& text,
                                        const std::vector<std::string>& pool) {
  auto out = text;
  const auto pos = rng.below(out.size());
  for (;;) {
    const auto& cand = pool[rng.below(pool.size())];
    if (cand != out[pos]) {
      out[pos] = cand;
      return out;
    }
  }
}

}  // namespace

SynthSet synth_pairs(const SynthConfig& cfg) {
  if (cfg.vocab_size < 2) throw Error(Errc::VocabTooSmall, "need at least 2 content tokens");
  if (cfg.min_len < 1 || cfg.max_len < cfg.min_len) throw Error(Errc::Config, "bad text length range");
  if (cfg.kind == SynthKind::LengthBiased && cfg.verbose_size < 1)
    throw Error(Errc::VocabTooSmall, "length-biased set needs verbose tokens");

  Rng rng(derive_seed(cfg.seed, to_string(cfg.kind)));
  SynthSet set;
  for (std::size_t i = 0; i < cfg.vocab_size; ++i) set.vocab.push_back(content_token(i));
  if (cfg.kind == SynthKind::LengthBiased)
    for (std::size_t i = 0; i < cfg.verbose_size; ++i) set.vocab.push_back(verbose_token(i));

  auto id = [](std::size_t i) { return "p" + std::to_string(i); };

  switch (cfg.kind) {
    case SynthKind::LengthBiased: {
      for (std::size_t i = 0; i < cfg.n; ++i) {
        TokenizedPair p{id(i), random_text(rng, cfg), {}};
        p.rejected = p.chosen;
        const auto extra = rng.between(static_cast<std::int64_t>(cfg.min_extra), static_cast<std::int64_t>(cfg.max_extra));
        for (std::int64_t k = 0; k < extra; ++k) p.rejected.push_back(verbose_token(rng.below(cfg.verbose_size)));
        set.pairs.push_back(std::move(p));
      }
      break;
    }
    case SynthKind::ConflictingHardNegative: {
      const auto couples = static_cast<std::size_t>(std::floor(cfg.mirrored_fraction * static_cast<double>(cfg.n) / 2.0));
      std::vector<std::vector<std::string>> chosen;
      for (std::size_t i = 0; i < cfg.n; ++i) chosen.push_back(random_text(rng, cfg));
      // couple c occupies slots 2c and 2c+1: the second chosen text is the first with one token swapped
      std::vector<std::string> all = set.vocab;
      for (std::size_t c = 0; c < couples; ++c) chosen[2 * c + 1] = one_token_swap(rng, chosen[2 * c], all);
      std::vector<std::string> seen;
      {
        std::vector<bool> used(cfg.vocab_size, false);
        for (const auto& t : chosen)
          for (const auto& tok : t) used[std::stoul(tok.substr(1))] = true;
        for (std::size_t i = 0; i < cfg.vocab_size; ++i)
          if (used[i]) seen.push_back(content_token(i));
      }
      if (seen.size() < 2) throw Error(Errc::VocabTooSmall, "chosen texts use fewer than 2 distinct tokens");
      for (std::size_t i = 0; i < cfg.n; ++i) {
        TokenizedPair p{id(i), chosen[i], {}};
        if (i < 2 * couples)
          p.rejected = chosen[i ^ 1];
        else
          p.rejected = one_token_swap(rng, chosen[i], seen);
        set.pairs.push_back(std::move(p));
      }
      break;
    }
    case SynthKind::Duplicate: {
      if (cfg.duplicate_fraction < 0 || cfg.duplicate_fraction > 1)
        throw Error(Errc::Config, "duplicate fraction must be in [0, 1]");
      const auto dups = static_cast<std::size_t>(std::llround(cfg.duplicate_fraction * static_cast<double>(cfg.n)));
      auto order = iota(cfg.n);
      rng.shuffle(order);
      std::vector<bool> is_dup(cfg.n, false);
      for (std::size_t k = 0; k < dups; ++k) is_dup[order[k]] = true;
      for (std::size_t i = 0; i < cfg.n; ++i) {
        TokenizedPair p{id(i), random_text(rng, cfg), {}};
        p.rejected = is_dup[i] ? p.chosen : one_token_swap(rng, p.chosen, set.vocab);
        set.pairs.push_back(std::move(p));
      }
      break;
    }
  }
  set.duplicate.reserve(set.pairs.size());
  for (const auto& p : set.pairs) set.duplicate.push_back(p.chosen == p.rejected);
  return set;
}

// ---------------------------------------------------------------------------

TrainTrace train(PolicyParams policy, const std::vector<TokenizedPair>& pairs, const DpoConfig& cfg) {
  cfg.check();
  if (pairs.empty()) throw Error(Errc::EmptyInput, "no pairs to train on");
  const PolicyParams reference = policy;
  const auto cps = compile(reference, pairs);
  const auto all = iota(cps.size());
  const bool full = cfg.batch_size == 0 || cfg.batch_size >= cps.size();
  Rng rng(derive_seed(cfg.seed, "train"));
  std::vector<std::size_t> perm = all;
  std::size_t cursor = perm.size();

  auto next_batch = [&] {
    if (full) return all;
    std::vector<std::size_t> b;
    while (b.size() < cfg.batch_size) {
      if (cursor == perm.size()) {
        rng.shuffle(perm);
        cursor = 0;
      }
      b.push_back(perm[cursor++]);
    }
    return b;
  };

  TrainTrace trace;
  for (int step = 0; step <= cfg.steps; ++step) {
    // trace row over the full set; the update uses the step's batch
    auto e = evaluate(policy.logits, cps, all, cfg.alpha, full);
    if (!std::isfinite(e.loss))
      throw Error(Errc::Divergence, "non-finite loss at step " + std::to_string(step) + "; lower the learning rate");
    auto g = full ? std::move(e.grad) : evaluate(policy.logits, cps, next_batch(), cfg.alpha, true).grad;
    double norm = 0;
    for (double x : g) norm += x * x;
    trace.rows.push_back({step, e.loss, e.acc, e.mean_dt, e.mean_dr, std::sqrt(norm)});
    if (step == cfg.steps) break;
    for (std::size_t k = 0; k < g.size(); ++k) {
      policy.logits[k] -= cfg.learning_rate * g[k];
      if (!std::isfinite(policy.logits[k]))
        throw Error(Errc::Divergence, "non-finite logits after step " + std::to_string(step) + "; lower the learning rate");
    }
  }
  trace.final_policy = std::move(policy);
  return trace;
}

std::string TrainTrace::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "step,loss,reward_acc,mean_delta_theta,mean_delta_ref,grad_norm\n";
  for (const auto& r : rows)
    out << r.step << ',' << r.loss << ',' << r.reward_acc << ',' << r.mean_delta_theta << ',' << r.mean_delta_ref << ','
        << r.grad_norm << '\n';
  return out.str();
}

std::vector<StepSummary> diagnose_traces(const std::vector<LogProbRecord>& records, double alpha) {
  std::map<std::int64_t, StepSummary> by_step;
  std::map<std::int64_t, std::size_t> hits;
  for (const auto& r : records) {
    auto& s = by_step[r.step];
    s.step = r.step;
    const auto d = deltas(r, alpha);
    ++s.count;
    s.mean_delta_theta += d.delta_theta;
    s.mean_delta_ref += d.delta_ref;
    s.mean_lp_ref_chosen += r.logp_ref_chosen;
    s.mean_lp_ref_rejected += r.logp_ref_rejected;
    s.mean_loss += d.loss;
    if (d.margin > 0) ++hits[r.step];
  }
  std::vector<StepSummary> out;
  for (auto& [step, s] : by_step) {
    const double n = static_cast<double>(s.count);
    s.mean_delta_theta /= n;
    s.mean_delta_ref /= n;
    s.mean_lp_ref_chosen /= n;
    s.mean_lp_ref_rejected /= n;
    s.mean_loss /= n;
    s.reward_acc = static_cast<double>(hits[step]) / n;
    out.push_back(s);
  }
  return out;
}

std::string to_csv(const std::vector<StepSummary>& series) {
  std::ostringstream out;
  out.precision(17);
  out << "step,count,mean_delta_theta,mean_delta_ref,mean_lp_ref_chosen,mean_lp_ref_rejected,reward_acc,mean_loss\n";
  for (const auto& s : series)
    out << s.step << ',' << s.count << ',' << s.mean_delta_theta << ',' << s.mean_delta_ref << ',' << s.mean_lp_ref_chosen
        << ',' << s.mean_lp_ref_rejected << ',' << s.reward_acc << ',' << s.mean_loss << '\n';
  return out.str();
}

}  // namespace hardneg::dpo
