#include "langvec/training.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "langvec/adam.hpp"
#include "langvec/evaluation.hpp"
#include "langvec/format.hpp"
#include "langvec/tape.hpp"

namespace langvec {

void TrainConfig::validate() const {
  if (steps == 0) throw ConfigError("steps must be at least 1");
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (eval_every == 0) throw ConfigError("eval_every must be at least 1");
  if (max_length < 3) throw ConfigError("max_length must be at least 3");
  if (!std::isfinite(learning_rate) || learning_rate < 0) throw ConfigError("learning_rate must be finite and >= 0");
  if (!std::isfinite(clip_norm) || clip_norm < 0) throw ConfigError("clip_norm must be finite and >= 0");
}

namespace {

// Distinct stream for initialization so it does not mirror the sampler.
constexpr std::uint64_t kInitSalt = 0x9e3779b97f4a7c15ULL;

template <typename T>
class Trainer {
 public:
  Trainer(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab, const TrainConfig& config,
          const ModelConfig& model_config)
      : config_(config),
        vocab_(vocab),
        languages_(corpus.languages()),
        sampler_(corpus, split, vocab, languages_, config.max_length),
        model_(Model<T>::initialize(model_config, config.seed ^ kInitSalt)),
        adam_(model_.params(), AdamConfig{.learning_rate = config.learning_rate}),
        rng_(config.seed) {
    for (std::size_t l = 0; l < languages_.size(); ++l) {
      auto seqs = heldout_sequences(corpus, split, vocab, languages_[l], l, config.max_length);
      if (seqs.empty()) seqs = sampler_.examples(l);
      eval_sets_.push_back(std::move(seqs));
    }
  }

  TrainResult run() {
    TrainResult result;
    double best_metric = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    double train_sum = 0.0;
    std::size_t train_count = 0;
    best_ = snapshot(0, {});

    auto evaluate_now = [&](std::uint64_t step) {
      const double train_loss =
          train_count == 0 ? std::numeric_limits<double>::quiet_NaN() : train_sum / static_cast<double>(train_count);
      train_sum = 0.0;
      train_count = 0;
      MetricRecord m{step, train_loss, heldout_metric()};
      result.metrics.push_back(m);
      if (config_.on_eval) config_.on_eval(m);
      if (!std::isfinite(m.heldout_bits_per_char)) {
        throw DivergenceError("held-out cross-entropy is not finite at step " + std::to_string(step), best_);
      }
      if (m.heldout_bits_per_char < best_metric) {
        best_metric = m.heldout_bits_per_char;
        since_best = 0;
        best_ = snapshot(step, result.metrics);
        return false;
      }
      ++since_best;
      return config_.patience > 0 && since_best >= config_.patience;
    };

    evaluate_now(0);
    for (std::uint64_t step = 1; step <= config_.steps; ++step) {
      const double loss = update(step);
      train_sum += loss;
      ++train_count;
      result.steps_run = step;
      if (step % config_.eval_every == 0 || step == config_.steps) {
        if (evaluate_now(step)) {
          result.stopped_early = step < config_.steps;
          break;
        }
      }
    }
    best_.history = result.metrics;
    result.checkpoint = std::move(best_);
    return result;
  }

 private:
  double update(std::uint64_t step) {
    const auto batch = sampler_.sample(rng_, config_.batch_size);
    std::size_t total = 0;
    for (const auto& seq : batch) total += seq.predictions();
    const T seed = static_cast<T>(1.0 / static_cast<double>(total));
    double nats = 0.0;
    for (const auto& seq : batch) {
      tape_.clear();
      const BoundModel bound = model_.bind(tape_, true);
      const LanguageVars lang = model_.language_vars(tape_, bound, seq.language);
      const Var loss = model_.sequence_loss(tape_, bound, lang, seq);
      nats += static_cast<double>(tape_.value(loss)[0]);
      tape_.backward(loss, seed);
    }
    const double mean = nats / static_cast<double>(total);
    if (!std::isfinite(mean)) {
      throw DivergenceError("training loss is not finite at step " + std::to_string(step), best_);
    }
    clip_gradients(model_.params(), config_.clip_norm);
    try {
      adam_.apply(model_.params());
    } catch (const NumericError& e) {
      throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(step), best_);
    }
    return mean;
  }

  double heldout_metric() const {
    double sum = 0.0;
    for (std::size_t l = 0; l < languages_.size(); ++l) {
      sum += score_sequences(model_, model_.language_vector(l), eval_sets_[l], languages_[l]).bits_per_char;
    }
    return sum / static_cast<double>(languages_.size());
  }

  Checkpoint snapshot(std::uint64_t step, const std::vector<MetricRecord>& history) const {
    Checkpoint c;
    c.config = model_.config();
    c.vocab = vocab_;
    c.languages = languages_;
    c.step = step;
    c.history = history;
    c.params = model_.params().template cast<float>();
    return c;
  }

  const TrainConfig& config_;
  const Vocabulary& vocab_;
  std::vector<std::string> languages_;
  TrainingSampler sampler_;
  Model<T> model_;
  AdamState<T> adam_;
  std::mt19937_64 rng_;
  Tape<T> tape_;
  std::vector<std::vector<TokenSequence>> eval_sets_;
  Checkpoint best_;
};

}  // namespace

TrainResult train(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab, const TrainConfig& config,
                  ModelConfig model_config) {
  config.validate();
  model_config.vocab_size = vocab.size();
  model_config.num_languages = corpus.num_languages();
  model_config.validate();
  if (config.precision == Precision::kFloat64) return Trainer<double>(corpus, split, vocab, config, model_config).run();
  return Trainer<float>(corpus, split, vocab, config, model_config).run();
}

std::string metrics_csv(const std::vector<MetricRecord>& metrics) {
  std::string out = "step,train_nats_per_char,heldout_bits_per_char\n";
  for (const auto& m : metrics) {
    out += std::to_string(m.step) + ',' + format_number(m.train_nats_per_char) + ',' +
           format_number(m.heldout_bits_per_char) + '\n';
  }
  return out;
}

}  // namespace langvec
