#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "langvec/checkpoint.hpp"
#include "langvec/dendrogram.hpp"
#include "langvec/model.hpp"

namespace langvec {

/// Segment-wise (1 - alpha) * a + alpha * b. Exact at both ends.
template <typename T>
LanguageVector<T> interpolate(const LanguageVector<T>& a, const LanguageVector<T>& b, double alpha);

/// `start:end:step`, both ends inclusive (the last point may overshoot `end`
/// by at most 1e-12). Throws ConfigError on malformed input.
std::vector<double> parse_grid(std::string_view spec);

/// Encodes plain sentences (no verse ids) for scoring under language id 0.
std::vector<TokenSequence> encode_sentences(const Vocabulary& vocab, const std::vector<std::string>& sentences);

/// Bits per character of `sentences` under an arbitrary language vector.
double score_text(const Checkpoint& ckpt, const LanguageVector<float>& lang, const std::vector<std::string>& sentences);

struct CurvePoint {
  double alpha = 0.0;
  double bits_per_char = 0.0;
};

/// Cross-entropy of `sentences` along the line from `lang_a` (alpha 0) to `lang_b` (alpha 1).
std::vector<CurvePoint> interpolation_curve(const Checkpoint& ckpt, std::string_view lang_a, std::string_view lang_b,
                                            const std::vector<std::string>& sentences, const std::vector<double>& grid);
/// `alpha,bits_per_char` with a header row.
std::string curve_csv(const std::vector<CurvePoint>& curve);

/// Full language vectors of every language, ready for clustering.
std::vector<std::pair<std::string, std::vector<double>>> language_vectors(const Checkpoint& ckpt);
DendrogramTree cluster_languages(const Checkpoint& ckpt, Metric metric = Metric::kCosine,
                                 Linkage linkage = Linkage::kAverage);

struct SamplerConfig {
  /// 0 selects greedy decoding.
  double temperature = 1.0;
  /// Upper bound on generated symbols, the end marker included.
  std::size_t max_length = 512;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Draws from softmax(logits / temperature); temperature 0 takes the first maximum.
template <typename T>
TokenId sample_token(std::span<const T> logits, double temperature, std::mt19937_64& rng);

/// BOS followed by the sampled ids; the last id is EOS unless `max_length` was reached.
template <typename T>
std::vector<TokenId> generate_ids(const Model<T>& model, const LanguageVector<T>& lang, const SamplerConfig& config);

/// Generated text with the markers stripped.
std::string generate(const Checkpoint& ckpt, const LanguageVector<float>& lang, const SamplerConfig& config);

struct EstimationConfig {
  std::size_t steps = 200;
  double learning_rate = 0.1;
  /// Starting point: `init_vector` when non-empty, else this language's vector.
  std::string init_language;
  std::vector<float> init_vector;
  /// Only the first `sentence_budget` sentences are used.
  std::size_t sentence_budget = 32;

  void validate() const;
};

struct EstimationResult {
  LanguageVector<float> vector;
  /// Held-out bits per character at the initial and the returned vector.
  double before_bits_per_char = 0.0;
  double after_bits_per_char = 0.0;
  std::size_t optimization_sentences = 0;
  std::size_t holdout_sentences = 0;
  /// Steps whose update lowered the optimization loss.
  std::size_t accepted_steps = 0;
};

/// Fits a language vector to `sentences` with every model parameter frozen.
///
/// The first three quarters of the (budgeted) sentences are optimized with
/// Adam on the vector alone, minimizing mean negative log-likelihood per
/// character. An update that raises that loss is undone and the learning rate
/// halved. The last quarter (at least one sentence) is held out; the vector
/// with the lowest held-out cross-entropy among all accepted iterates,
/// the starting point included, is returned.
EstimationResult estimate_vector(const Checkpoint& ckpt, const std::vector<std::string>& sentences,
                                 const EstimationConfig& config);

}  // namespace langvec
