#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "langvec/checkpoint.hpp"
#include "langvec/corpus.hpp"
#include "langvec/model.hpp"
#include "langvec/training.hpp"

namespace langvec {

struct LanguageScore {
  std::string language;
  /// Predicted positions (characters plus the end marker).
  std::size_t chars = 0;
  double total_nats = 0.0;
  double nats_per_char = 0.0;
  double bits_per_char = 0.0;
};

struct EvalReport {
  std::vector<LanguageScore> languages;
  /// Unweighted means over languages.
  double mean_nats_per_char = 0.0;
  double mean_bits_per_char = 0.0;

  /// Throws LookupError for languages not in the report.
  const LanguageScore& at(std::string_view language) const;
};

enum class EvalPath { kBatched, kStepwise };

/// Score of `seqs` under `lang`. Throws ConfigError if there is nothing to predict.
template <typename T>
LanguageScore score_sequences(const Model<T>& model, const LanguageVector<T>& lang, std::span<const TokenSequence> seqs,
                              std::string language, EvalPath path = EvalPath::kBatched);

/// Encoded held-out verses of `language`.
std::vector<TokenSequence> heldout_sequences(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab,
                                             std::string_view language, std::size_t language_id,
                                             std::size_t max_length = kDefaultMaxLength);

/// Held-out cross-entropy of each requested language (all of the checkpoint's
/// languages when `languages` is empty). Unknown codes raise LookupError.
EvalReport evaluate(const Checkpoint& ckpt, const VerseCorpus& corpus, const SplitSpec& split,
                    const std::vector<std::string>& languages = {}, EvalPath path = EvalPath::kBatched);

/// Aggregates per-language scores into a report.
EvalReport make_report(std::vector<LanguageScore> scores);

/// `language,heldout_chars,bits_per_char,nats_per_char` plus a `mean` row.
std::string report_csv(const EvalReport& report);

enum class OrderMode { kGiven, kRandom };

/// Language-count growth: run k trains on the first `schedule[k]` languages of the order.
struct CapacityPlan {
  std::vector<std::string> languages;
  std::vector<std::size_t> schedule;
  OrderMode order = OrderMode::kGiven;
  /// Seeds the shuffle in random mode and every run's training seed.
  std::uint64_t seed = 1;
  /// Languages whose score is reported; empty means all.
  std::vector<std::string> tracked;
  TrainConfig train;
  ModelConfig model;

  /// Throws ConfigError unless the schedule is strictly increasing and within range.
  void validate() const;
  /// The order after the optional seeded shuffle.
  std::vector<std::string> resolved_order() const;
};

struct CapacityRow {
  std::size_t num_languages = 0;
  std::string language;
  double heldout_bits_per_char = 0.0;
};

/// Training seed of the run with `num_languages` languages.
std::uint64_t run_seed(std::uint64_t master_seed, std::uint64_t num_languages);

/// Rows reach `sink` as each run finishes, so a failing run keeps earlier rows.
void capacity_experiment(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab,
                         const CapacityPlan& plan, const std::function<void(const CapacityRow&)>& sink);
std::vector<CapacityRow> capacity_experiment(const VerseCorpus& corpus, const SplitSpec& split,
                                             const Vocabulary& vocab, const CapacityPlan& plan);
std::string capacity_csv(const std::vector<CapacityRow>& rows);

/// Monolingual training at each hidden size.
struct ShrinkPlan {
  std::string language;
  std::vector<std::size_t> hidden_sizes;
  TrainConfig train;
  ModelConfig model;

  void validate() const;
};

/// `count` sizes starting at `base`, halving each time (stops before 0).
std::vector<std::size_t> halving_schedule(std::size_t base, std::size_t count);

struct ShrinkRow {
  std::size_t hidden_size = 0;
  std::size_t total_params = 0;
  std::size_t lstm_params = 0;
  double heldout_bits_per_char = 0.0;
};

void shrink_experiment(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab,
                       const ShrinkPlan& plan, const std::function<void(const ShrinkRow&)>& sink);
std::vector<ShrinkRow> shrink_experiment(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab,
                                         const ShrinkPlan& plan);
std::string shrink_csv(const std::vector<ShrinkRow>& rows);

}  // namespace langvec
