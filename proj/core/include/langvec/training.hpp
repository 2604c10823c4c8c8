#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "langvec/checkpoint.hpp"
#include "langvec/corpus.hpp"
#include "langvec/model.hpp"
#include "langvec/sampler.hpp"
#include "langvec/vocabulary.hpp"

namespace langvec {

enum class Precision { kFloat32, kFloat64 };

struct TrainConfig {
  std::size_t steps = 1000;
  std::size_t batch_size = 16;
  std::size_t eval_every = 100;
  /// Evaluations without held-out improvement before stopping; 0 disables.
  std::size_t patience = 0;
  std::uint64_t seed = 1;
  double learning_rate = 1e-3;
  /// Global gradient norm cap; 0 disables.
  double clip_norm = 5.0;
  Precision precision = Precision::kFloat32;
  std::size_t max_length = kDefaultMaxLength;
  /// Called after every evaluation, including the one before training.
  std::function<void(const MetricRecord&)> on_eval;

  /// Throws ConfigError for zero steps, batch size, eval interval or length.
  void validate() const;
};

/// Training stopped on a non-finite loss or gradient. Carries the best
/// checkpoint seen before the failure.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, Checkpoint best) : NumericError(what), best_(std::move(best)) {}
  const Checkpoint& best() const { return best_; }

 private:
  Checkpoint best_;
};

struct TrainResult {
  /// Parameters with the lowest held-out cross-entropy among all evaluations.
  Checkpoint checkpoint;
  std::vector<MetricRecord> metrics;
  std::uint64_t steps_run = 0;
  bool stopped_early = false;
};

/// Trains a model on every language of `corpus` (language ids follow the
/// corpus's sorted order). `model_config.vocab_size` and `num_languages` are
/// taken from `vocab` and `corpus`.
///
/// Each step draws `batch_size` examples with uniform language sampling and
/// minimizes the mean negative log-likelihood per predicted character. The
/// held-out metric is the mean over languages of held-out bits per character;
/// languages without held-out verses are scored on their training verses.
/// An evaluation runs before the first update and after every `eval_every`
/// steps and at the end.
TrainResult train(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab,
                  const TrainConfig& config, ModelConfig model_config);

/// `step,train_nats_per_char,heldout_bits_per_char` with a header row.
std::string metrics_csv(const std::vector<MetricRecord>& metrics);

}  // namespace langvec
