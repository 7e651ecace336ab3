#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hardneg/corpus.hpp"

namespace hardneg::dpo {

struct DpoConfig {
  double alpha = 0.1;
  double learning_rate = 1e-6;
  int steps = 300;
  std::size_t batch_size = 0;  // 0: full batch
  std::uint64_t seed = 0;

  void check() const;
};

/// Position-independent unigram policy: every token is drawn from
/// softmax(logits) regardless of context.
struct PolicyParams {
  std::vector<std::string> vocab;
  std::vector<double> logits;

  static PolicyParams uniform(std::vector<std::string> vocab);

  std::size_t index_of(const std::string& token) const;  // UnknownToken
  std::vector<double> probabilities() const;
  double log_normalizer() const;
};

struct TokenizedPair {
  std::string id;
  std::vector<std::string> chosen;
  std::vector<std::string> rejected;
};

struct DeltaRecord {
  std::string pair_id;
  double delta_theta = 0;
  double delta_ref = 0;
  double margin = 0;
  double loss = 0;
};

// ---------------------------------------------------------------------------
// scalar pieces

double sigmoid(double x);
/// -ln sigmoid(x), without overflow for large |x|.
double neg_log_sigmoid(double x);

double preference_probability(double reward_w, double reward_l);
double dpo_loss(double delta_theta, double delta_ref, double alpha);

double seq_logprob(const PolicyParams& policy, const std::vector<std::string>& tokens);

DeltaRecord deltas(const PolicyParams& policy, const PolicyParams& reference, const TokenizedPair& pair,
                   double alpha);
DeltaRecord deltas(const LogProbRecord& r, double alpha);

/// Fraction of records with margin > 0. EmptyInput on no records.
double reward_accuracy(const std::vector<DeltaRecord>& records);

// ---------------------------------------------------------------------------
// gradient
//
// With per-pair token counts c_w, c_l, lengths n_w, n_l and p = softmax(z):
//   seq_logprob(y) = c_y . z - n_y * lse(z)
//   d margin / dz  = (c_w - c_l) - (n_w - n_l) * p
//   d loss / dz    = -alpha * sigmoid(-alpha * margin) * d margin / dz
// averaged over the batch.

/// A pair reduced to its count difference; lets the trainer skip re-tokenizing.
struct CompiledPair {
  std::vector<std::pair<std::size_t, double>> count_diff;  // sparse c_w - c_l
  double len_diff = 0;                                     // n_w - n_l
  double delta_ref = 0;
};

CompiledPair compile(const PolicyParams& reference, const TokenizedPair& pair);
std::vector<CompiledPair> compile(const PolicyParams& reference, const std::vector<TokenizedPair>& pairs);

double delta_theta(const std::vector<double>& logits, double lse, const CompiledPair& p);

/// Mean batch loss as a function of the policy logits.
double batch_loss(const PolicyParams& policy, const PolicyParams& reference, const std::vector<TokenizedPair>& batch,
                  double alpha);

/// Analytic gradient of batch_loss with respect to policy.logits.
std::vector<double> grad_dpo(const PolicyParams& policy, const PolicyParams& reference,
                             const std::vector<TokenizedPair>& batch, double alpha);

// ---------------------------------------------------------------------------
// synthetic preference sets

enum class SynthKind { LengthBiased, ConflictingHardNegative, Duplicate };

std::string_view to_string(SynthKind k);
std::optional<SynthKind> parse_synth_kind(std::string_view s);

struct SynthConfig {
  SynthKind kind = SynthKind::LengthBiased;
  std::size_t n = 500;
  std::size_t vocab_size = 64;    // content tokens w0..
  std::size_t verbose_size = 16;  // LengthBiased padding tokens v0.., never in chosen texts
  std::size_t min_len = 8;
  std::size_t max_len = 16;
  std::size_t min_extra = 5;  // LengthBiased padding length range
  std::size_t max_extra = 15;
  double duplicate_fraction = 0.2;
  /// ConflictingHardNegative: share of pairs built as mirrored couples
  /// (A prefers x over y, B is A with x and y swapped).
  double mirrored_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct SynthSet {
  std::vector<std::string> vocab;
  std::vector<TokenizedPair> pairs;
  std::vector<bool> duplicate;  // per pair: rejected == chosen
};

SynthSet synth_pairs(const SynthConfig& cfg);

// ---------------------------------------------------------------------------
// training

struct TraceRow {
  int step = 0;
  double loss = 0;
  double reward_acc = 0;
  double mean_delta_theta = 0;
  double mean_delta_ref = 0;
  double grad_norm = 0;
};

struct TrainTrace {
  std::vector<TraceRow> rows;  // step 0 (theta = ref) through cfg.steps
  PolicyParams final_policy;

  std::string to_csv() const;
};

/// Plain gradient descent on the mean loss. The reference is the initial
/// policy, frozen. Non-finite loss throws Divergence.
TrainTrace train(PolicyParams policy, const std::vector<TokenizedPair>& pairs, const DpoConfig& cfg);

// ---------------------------------------------------------------------------
// log-prob diagnostics

struct StepSummary {
  std::int64_t step = 0;
  std::size_t count = 0;
  double mean_delta_theta = 0;
  double mean_delta_ref = 0;
  double mean_lp_ref_chosen = 0;
  double mean_lp_ref_rejected = 0;
  double reward_acc = 0;
  double mean_loss = 0;
};

/// Per-step aggregates in ascending step order.
std::vector<StepSummary> diagnose_traces(const std::vector<LogProbRecord>& records, double alpha = 0.1);
std::string to_csv(const std::vector<StepSummary>& series);

}  // namespace hardneg::dpo
