#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "langvec/param_store.hpp"
#include "langvec/tape.hpp"
#include "langvec/tensor.hpp"
#include "langvec/vocabulary.hpp"

namespace langvec {

/// Dimensions of the two-layer character LSTM.
struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t char_embed_dim = 16;
  std::size_t hidden_dim = 64;
  std::size_t lang_embed_dim = 8;
  std::size_t num_languages = 1;
  /// Width of the tanh layer before the softmax; 0 means `hidden_dim`.
  std::size_t pre_softmax_dim = 0;
  bool tie_language_embeddings = false;

  std::size_t pre_softmax() const { return pre_softmax_dim == 0 ? hidden_dim : pre_softmax_dim; }
  std::size_t num_segments() const { return tie_language_embeddings ? 1 : 3; }
  /// Length of the concatenated language vector.
  std::size_t full_lang_dim() const { return num_segments() * lang_embed_dim; }
  /// Throws ConfigError if any dimension is zero.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Exact parameter counts implied by the configuration's shapes.
std::size_t count_parameters(const ModelConfig& config);
std::size_t count_lstm_parameters(const ModelConfig& config);

/// Injection points of the language vector.
enum class Segment : std::size_t { kLstm1 = 0, kLstm2 = 1, kSoftmax = 2 };

/// A point in language space: one segment per injection point, or a single
/// shared segment when embeddings are tied.
template <typename T>
struct LanguageVector {
  std::vector<Tensor<T>> segments;

  bool tied() const { return segments.size() == 1; }
  const Tensor<T>& segment(Segment s) const { return segments[tied() ? 0 : static_cast<std::size_t>(s)]; }
  /// Concatenation of all segments.
  std::vector<T> full() const;
  static LanguageVector from_full(std::span<const T> full, std::size_t num_segments);

  friend bool operator==(const LanguageVector&, const LanguageVector&) = default;
};

/// Per-layer hidden and cell vectors.
template <typename T>
struct RecurrentState {
  std::array<std::vector<T>, 2> h;
  std::array<std::vector<T>, 2> c;
};

struct LstmParamIds {
  ParamId w_x;
  ParamId w_h;
  ParamId bias;
  ParamId gain_x;
  ParamId gain_h;
  ParamId gain_c;
  ParamId bias_c;
};

struct ModelParamIds {
  ParamId char_embed;
  std::array<ParamId, 3> lang_embed;  // all equal when tied
  std::array<LstmParamIds, 2> lstm;
  ParamId hidden_w;
  ParamId hidden_b;
  ParamId output_w;
  ParamId output_b;
};

struct LstmVars {
  Var w_x, w_h, bias, gain_x, gain_h, gain_c, bias_c;
};

/// Model parameters as recorded on a tape.
struct BoundModel {
  Var char_embed;
  std::array<Var, 3> lang_embed;
  std::array<LstmVars, 2> lstm;
  Var hidden_w, hidden_b, output_w, output_b;
};

/// Language vector segments as recorded on a tape.
struct LanguageVars {
  std::array<Var, 3> segments;
};

/// One layer-normalized LSTM step on the tape:
///   a  = LN(W_x x; g_x) + LN(W_h h; g_h) + b,  split into i, f, g, o
///   c' = s(f) * c + s(i) * tanh(g)
///   h' = s(o) * tanh(LN(c'; g_c, b_c))
/// Returns {h', c'}.
template <typename T>
std::pair<Var, Var> lstm_cell(Tape<T>& tape, const LstmVars& w, Var x, Var h, Var c, std::size_t hidden);

struct SequenceNll {
  double nats = 0.0;
  std::size_t predictions = 0;
};

template <typename T>
class Model {
 public:
  /// Adopts `params`; names and shapes must match the configuration.
  Model(ModelConfig config, ParamStore<T> params);

  /// Random initialization (uniform Glorot matrices, N(0, 0.1) embeddings,
  /// zero biases, unit gains, forget-gate bias 1).
  static Model initialize(const ModelConfig& config, std::uint64_t seed);
  /// Every parameter zero: the predictive distribution is uniform.
  static Model zeros(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }
  const ModelParamIds& ids() const { return ids_; }

  LanguageVector<T> language_vector(std::size_t language) const;
  void set_language_vector(std::size_t language, const LanguageVector<T>& vector);

  // Inference without recording.
  RecurrentState<T> initial_state() const;
  /// Consumes `input`, advances `state`, returns logits over the vocabulary.
  Tensor<T> forward_step(RecurrentState<T>& state, TokenId input, const LanguageVector<T>& lang) const;
  /// Teacher-forced negative log-likelihood, one step at a time.
  SequenceNll sequence_nll(const TokenSequence& seq, const LanguageVector<T>& lang) const;
  /// Same quantity for many sequences at once, processed as a batch.
  std::vector<SequenceNll> batch_nll(std::span<const TokenSequence> seqs, const LanguageVector<T>& lang) const;

  // Recorded path.
  /// Binds every parameter; trainable bindings route gradients into `params()`.
  BoundModel bind(Tape<T>& tape, bool trainable);
  BoundModel bind_frozen(Tape<T>& tape) const;
  LanguageVars language_vars(Tape<T>& tape, const BoundModel& bound, std::size_t language) const;
  /// Splits a recorded full-length language vector into its segments.
  LanguageVars language_vars(Tape<T>& tape, Var full) const;
  /// Total negative log-likelihood of `seq` in nats (a scalar record).
  Var sequence_loss(Tape<T>& tape, const BoundModel& bound, const LanguageVars& lang, const TokenSequence& seq) const;

 private:
  void check_language(const LanguageVector<T>& lang) const;

  ModelConfig config_;
  ParamStore<T> params_;
  ModelParamIds ids_;
};

extern template class Model<float>;
extern template class Model<double>;
extern template struct LanguageVector<float>;
extern template struct LanguageVector<double>;

}  // namespace langvec
