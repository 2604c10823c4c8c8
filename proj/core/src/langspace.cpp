#include "langvec/langspace.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include "langvec/adam.hpp"
#include "langvec/evaluation.hpp"
#include "langvec/format.hpp"
#include "langvec/tape.hpp"

namespace langvec {

template <typename T>
LanguageVector<T> interpolate(const LanguageVector<T>& a, const LanguageVector<T>& b, double alpha) {
  if (a.segments.size() != b.segments.size()) throw DimensionError("interpolate: tied and untied vectors mixed");
  if (!std::isfinite(alpha)) throw ContractError("interpolate: alpha must be finite");
  const T wa = static_cast<T>(1.0 - alpha), wb = static_cast<T>(alpha);
  LanguageVector<T> out;
  for (std::size_t s = 0; s < a.segments.size(); ++s) {
    const auto& x = a.segments[s];
    const auto& y = b.segments[s];
    if (!(x.shape() == y.shape())) {
      throw DimensionError("interpolate: segment shapes " + x.shape().str() + " and " + y.shape().str() + " differ");
    }
    Tensor<T> z(x.shape());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = wa * x[i] + wb * y[i];
    out.segments.push_back(std::move(z));
  }
  return out;
}

template LanguageVector<float> interpolate(const LanguageVector<float>&, const LanguageVector<float>&, double);
template LanguageVector<double> interpolate(const LanguageVector<double>&, const LanguageVector<double>&, double);

namespace {

double parse_double(std::string_view text, std::string_view spec) {
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || r.ec != std::errc{} || r.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError("bad grid '" + std::string(spec) + "': '" + std::string(text) + "' is not a number");
  }
  return v;
}

constexpr double kGridTolerance = 1e-12;

}  // namespace

std::vector<double> parse_grid(std::string_view spec) {
  const auto a = spec.find(':');
  const auto b = a == std::string_view::npos ? a : spec.find(':', a + 1);
  if (b == std::string_view::npos || spec.find(':', b + 1) != std::string_view::npos) {
    throw ConfigError("bad grid '" + std::string(spec) + "': expected start:end:step");
  }
  const double start = parse_double(spec.substr(0, a), spec);
  const double end = parse_double(spec.substr(a + 1, b - a - 1), spec);
  const double step = parse_double(spec.substr(b + 1), spec);
  if (step <= 0) throw ConfigError("bad grid '" + std::string(spec) + "': step must be positive");
  if (end < start) throw ConfigError("bad grid '" + std::string(spec) + "': end before start");
  const auto count = static_cast<std::size_t>(std::floor((end - start + kGridTolerance) / step)) + 1;
  if (count > 1000000) throw ConfigError("bad grid '" + std::string(spec) + "': too many points");
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
  if (std::abs(out.back() - end) <= kGridTolerance) out.back() = end;
  return out;
}

std::vector<TokenSequence> encode_sentences(const Vocabulary& vocab, const std::vector<std::string>& sentences) {
  std::vector<TokenSequence> out;
  for (const auto& s : sentences) {
    if (s.empty()) throw ConfigError("empty sentence");
    for (auto& seq : vocab.encode_sequences(0, s, kDefaultMaxLength)) out.push_back(std::move(seq));
  }
  return out;
}

double score_text(const Checkpoint& ckpt, const LanguageVector<float>& lang, const std::vector<std::string>& sentences) {
  if (sentences.empty()) throw ConfigError("no text to score");
  const auto model = ckpt.model<float>();
  return score_sequences(model, lang, encode_sentences(ckpt.vocab, sentences), "text").bits_per_char;
}

std::vector<CurvePoint> interpolation_curve(const Checkpoint& ckpt, std::string_view lang_a, std::string_view lang_b,
                                            const std::vector<std::string>& sentences, const std::vector<double>& grid) {
  const auto model = ckpt.model<float>();
  const auto a = model.language_vector(ckpt.language_index(lang_a));
  const auto b = model.language_vector(ckpt.language_index(lang_b));
  if (sentences.empty()) throw ConfigError("interpolation needs test text");
  if (grid.empty()) throw ConfigError("interpolation grid is empty");
  const auto seqs = encode_sentences(ckpt.vocab, sentences);
  std::vector<CurvePoint> out;
  for (double alpha : grid) {
    if (alpha < -kGridTolerance || alpha > 1.0 + kGridTolerance) {
      throw ConfigError("interpolation weight " + format_number(alpha) + " outside [0, 1]");
    }
    const double clamped = std::min(1.0, std::max(0.0, alpha));
    out.push_back({clamped, score_sequences(model, interpolate(a, b, clamped), seqs, "text").bits_per_char});
  }
  return out;
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "alpha,bits_per_char\n";
  for (const auto& p : curve) out += format_number(p.alpha) + ',' + format_number(p.bits_per_char) + '\n';
  return out;
}

std::vector<std::pair<std::string, std::vector<double>>> language_vectors(const Checkpoint& ckpt) {
  const auto model = ckpt.model<float>();
  std::vector<std::pair<std::string, std::vector<double>>> out;
  for (std::size_t l = 0; l < ckpt.languages.size(); ++l) {
    const auto full = model.language_vector(l).full();
    out.push_back({ckpt.languages[l], std::vector<double>(full.begin(), full.end())});
  }
  return out;
}

DendrogramTree cluster_languages(const Checkpoint& ckpt, Metric metric, Linkage linkage) {
  return cluster(language_vectors(ckpt), metric, linkage);
}

void SamplerConfig::validate() const {
  if (!std::isfinite(temperature) || temperature < 0) throw ConfigError("temperature must be finite and >= 0");
  if (max_length == 0) throw ConfigError("max_length must be at least 1");
}

template <typename T>
TokenId sample_token(std::span<const T> logits, double temperature, std::mt19937_64& rng) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  if (temperature == 0.0) return static_cast<TokenId>(best);
  const double top = logits[best];
  std::vector<double> weights(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    weights[i] = std::exp((static_cast<double>(logits[i]) - top) / temperature);
    total += weights[i];
  }
  // 53 random bits in [0, 1)
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(best);
}

template TokenId sample_token(std::span<const float>, double, std::mt19937_64&);
template TokenId sample_token(std::span<const double>, double, std::mt19937_64&);

template <typename T>
std::vector<TokenId> generate_ids(const Model<T>& model, const LanguageVector<T>& lang, const SamplerConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  auto state = model.initial_state();
  std::vector<TokenId> ids{Vocabulary::kBos};
  while (ids.size() <= config.max_length) {
    const auto logits = model.forward_step(state, ids.back(), lang);
    ids.push_back(sample_token(logits.values(), config.temperature, rng));
    if (ids.back() == Vocabulary::kEos) break;
  }
  return ids;
}

template std::vector<TokenId> generate_ids(const Model<float>&, const LanguageVector<float>&, const SamplerConfig&);
template std::vector<TokenId> generate_ids(const Model<double>&, const LanguageVector<double>&, const SamplerConfig&);

std::string generate(const Checkpoint& ckpt, const LanguageVector<float>& lang, const SamplerConfig& config) {
  const auto model = ckpt.model<float>();
  return ckpt.vocab.decode(generate_ids(model, lang, config));
}

void EstimationConfig::validate() const {
  if (!std::isfinite(learning_rate) || learning_rate < 0) throw ConfigError("learning rate must be finite and >= 0");
  if (sentence_budget < 2) throw ConfigError("sentence budget must be at least 2");
}

namespace {

class VectorObjective {
 public:
  VectorObjective(const Model<float>& model, std::vector<TokenSequence> seqs) : model_(model), seqs_(std::move(seqs)) {
    for (const auto& s : seqs_) chars_ += s.predictions();
  }

  // Mean nats per character; the gradient lands in `store`.
  double loss_and_grad(ParamStore<float>& store, ParamId vec) {
    store.zero_grad();
    double nats = 0.0;
    const float seed = static_cast<float>(1.0 / static_cast<double>(chars_));
    for (const auto& seq : seqs_) {
      tape_.clear();
      const BoundModel bound = model_.bind_frozen(tape_);
      const LanguageVars lang = model_.language_vars(tape_, tape_.param(store, vec));
      const Var loss = model_.sequence_loss(tape_, bound, lang, seq);
      nats += tape_.value(loss)[0];
      tape_.backward(loss, seed);
    }
    return nats / static_cast<double>(chars_);
  }

 private:
  const Model<float>& model_;
  std::vector<TokenSequence> seqs_;
  std::size_t chars_ = 0;
  Tape<float> tape_;
};

}  // namespace

EstimationResult estimate_vector(const Checkpoint& ckpt, const std::vector<std::string>& sentences,
                                 const EstimationConfig& config) {
  config.validate();
  const auto model = ckpt.model<float>();
  const std::size_t n = std::min(sentences.size(), config.sentence_budget);
  if (n < 2) throw ConfigError("estimation needs at least 2 sentences, got " + std::to_string(sentences.size()));
  for (std::size_t i = 0; i < n; ++i) {
    if (sentences[i].empty()) throw ConfigError("estimation sentence " + std::to_string(i + 1) + " is empty");
  }
  const std::size_t holdout = std::max<std::size_t>(1, n / 4);
  const std::vector<std::string> fit(sentences.begin(), sentences.begin() + static_cast<std::ptrdiff_t>(n - holdout));
  const std::vector<std::string> held(sentences.begin() + static_cast<std::ptrdiff_t>(n - holdout),
                                      sentences.begin() + static_cast<std::ptrdiff_t>(n));
  const auto held_seqs = encode_sentences(ckpt.vocab, held);

  LanguageVector<float> init;
  if (!config.init_vector.empty()) {
    if (config.init_vector.size() != ckpt.config.full_lang_dim()) {
      throw DimensionError("initial vector has " + std::to_string(config.init_vector.size()) + " values, model expects " +
                           std::to_string(ckpt.config.full_lang_dim()));
    }
    init = LanguageVector<float>::from_full(config.init_vector, ckpt.config.num_segments());
  } else {
    init = model.language_vector(ckpt.language_index(config.init_language));
  }

  auto held_bits = [&](const std::vector<float>& full) {
    const auto lang = LanguageVector<float>::from_full(full, ckpt.config.num_segments());
    return score_sequences(model, lang, held_seqs, "holdout").bits_per_char;
  };

  ParamStore<float> store;
  const auto full = init.full();
  const ParamId vec = store.add("language_vector", Tensor<float>(Shape{full.size()}, std::vector<float>(full)));
  AdamState<float> adam(store, AdamConfig{.learning_rate = config.learning_rate});
  VectorObjective objective(model, encode_sentences(ckpt.vocab, fit));

  EstimationResult result;
  result.optimization_sentences = fit.size();
  result.holdout_sentences = held.size();
  result.before_bits_per_char = held_bits(full);
  result.after_bits_per_char = result.before_bits_per_char;
  std::vector<float> best = full;

  double loss = objective.loss_and_grad(store, vec);
  for (std::size_t step = 0; step < config.steps; ++step) {
    const Tensor<float> previous = store.value(vec);
    try {
      adam.apply(store);
    } catch (const NumericError& e) {
      throw NumericError(std::string("estimation diverged: ") + e.what());
    }
    const double next = objective.loss_and_grad(store, vec);
    if (!(next <= loss)) {
      store.value(vec) = previous;
      adam.set_learning_rate(adam.config().learning_rate * 0.5);
      objective.loss_and_grad(store, vec);
      continue;
    }
    loss = next;
    ++result.accepted_steps;
    const std::vector<float> current(store.value(vec).values().begin(), store.value(vec).values().end());
    const double bits = held_bits(current);
    if (bits < result.after_bits_per_char) {
      result.after_bits_per_char = bits;
      best = current;
    }
  }
  result.vector = LanguageVector<float>::from_full(best, ckpt.config.num_segments());
  return result;
}

}  // namespace langvec
