#include "langvec/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <tuple>

namespace langvec {

void ModelConfig::validate() const {
  const std::pair<const char*, std::size_t> dims[] = {
      {"vocab_size", vocab_size},         {"char_embed_dim", char_embed_dim}, {"hidden_dim", hidden_dim},
      {"lang_embed_dim", lang_embed_dim}, {"num_languages", num_languages},   {"pre_softmax_dim", pre_softmax()},
  };
  for (const auto& [name, value] : dims) {
    if (value == 0) throw ConfigError(std::string("model dimension ") + name + " must be at least 1");
  }
}

namespace {

enum class Init { kGlorot, kGaussian, kZero, kOne, kGateBias };

struct ParamSpec {
  std::string name;
  Shape shape;
  Init init;
};

constexpr const char* kSegmentNames[3] = {"lang_embed.lstm1", "lang_embed.lstm2", "lang_embed.softmax"};
constexpr double kEmbeddingStddev = 0.1;
constexpr double kForgetGateBias = 1.0;

std::vector<ParamSpec> param_layout(const ModelConfig& c) {
  const std::size_t V = c.vocab_size, E = c.char_embed_dim, H = c.hidden_dim, L = c.lang_embed_dim,
                    N = c.num_languages, D = c.pre_softmax();
  std::vector<ParamSpec> out;
  out.push_back({"char_embed", Shape{V, E}, Init::kGaussian});
  if (c.tie_language_embeddings) {
    out.push_back({"lang_embed", Shape{N, L}, Init::kGaussian});
  } else {
    for (const char* name : kSegmentNames) out.push_back({name, Shape{N, L}, Init::kGaussian});
  }
  for (int layer = 1; layer <= 2; ++layer) {
    const std::string p = "lstm" + std::to_string(layer) + ".";
    const std::size_t in = (layer == 1 ? E : H) + L;
    out.push_back({p + "w_x", Shape{in, 4 * H}, Init::kGlorot});
    out.push_back({p + "w_h", Shape{H, 4 * H}, Init::kGlorot});
    out.push_back({p + "bias", Shape{4 * H}, Init::kGateBias});
    out.push_back({p + "ln_x.gain", Shape{4 * H}, Init::kOne});
    out.push_back({p + "ln_h.gain", Shape{4 * H}, Init::kOne});
    out.push_back({p + "ln_c.gain", Shape{H}, Init::kOne});
    out.push_back({p + "ln_c.bias", Shape{H}, Init::kZero});
  }
  out.push_back({"pre_softmax.w", Shape{H + L, D}, Init::kGlorot});
  out.push_back({"pre_softmax.bias", Shape{D}, Init::kZero});
  out.push_back({"output.w", Shape{D, V}, Init::kGlorot});
  out.push_back({"output.bias", Shape{V}, Init::kZero});
  return out;
}

}  // namespace

std::size_t count_parameters(const ModelConfig& config) {
  config.validate();
  std::size_t n = 0;
  for (const auto& spec : param_layout(config)) n += spec.shape.num_elements();
  return n;
}

std::size_t count_lstm_parameters(const ModelConfig& config) {
  config.validate();
  std::size_t n = 0;
  for (const auto& spec : param_layout(config)) {
    if (spec.name.starts_with("lstm")) n += spec.shape.num_elements();
  }
  return n;
}

template <typename T>
std::vector<T> LanguageVector<T>::full() const {
  std::vector<T> out;
  for (const auto& s : segments) out.insert(out.end(), s.values().begin(), s.values().end());
  return out;
}

template <typename T>
LanguageVector<T> LanguageVector<T>::from_full(std::span<const T> full, std::size_t num_segments) {
  if (num_segments == 0 || full.empty() || full.size() % num_segments != 0) {
    throw DimensionError("language vector of length " + std::to_string(full.size()) + " cannot form " +
                         std::to_string(num_segments) + " equal segments");
  }
  const std::size_t dim = full.size() / num_segments;
  LanguageVector out;
  for (std::size_t k = 0; k < num_segments; ++k) {
    out.segments.emplace_back(Shape{dim}, std::vector<T>(full.begin() + k * dim, full.begin() + (k + 1) * dim));
  }
  return out;
}

template struct LanguageVector<float>;
template struct LanguageVector<double>;

template <typename T>
std::pair<Var, Var> lstm_cell(Tape<T>& tape, const LstmVars& w, Var x, Var h, Var c, std::size_t hidden) {
  const Var lx = tape.layer_norm(tape.matmul(x, w.w_x), w.gain_x);
  const Var lh = tape.layer_norm(tape.matmul(h, w.w_h), w.gain_h);
  const Var a = tape.add(tape.add(lx, lh), w.bias);
  const Var i = tape.sigmoid(tape.slice(a, 0, hidden));
  const Var f = tape.sigmoid(tape.slice(a, hidden, hidden));
  const Var g = tape.tanh(tape.slice(a, 2 * hidden, hidden));
  const Var o = tape.sigmoid(tape.slice(a, 3 * hidden, hidden));
  const Var c_next = tape.add(tape.mul(f, c), tape.mul(i, g));
  const Var h_next = tape.mul(o, tape.tanh(tape.layer_norm(c_next, w.gain_c, w.bias_c)));
  return {h_next, c_next};
}

template std::pair<Var, Var> lstm_cell(Tape<float>&, const LstmVars&, Var, Var, Var, std::size_t);
template std::pair<Var, Var> lstm_cell(Tape<double>&, const LstmVars&, Var, Var, Var, std::size_t);

namespace {

// Scratch space for the unrecorded forward pass over `rows` stacked inputs.
template <typename T>
struct Scratch {
  std::vector<T> ax, ah, nx, nh, gates, chat, x, z, hid, logits;
};

// Advances `rows` LSTM states in place. Arithmetic mirrors lstm_cell exactly.
template <typename T>
void lstm_rows(const ParamStore<T>& p, const LstmParamIds& ids, std::size_t H, const T* x, std::size_t in_dim,
               T* h, T* c, std::size_t rows, Scratch<T>& s) {
  const std::size_t G = 4 * H;
  s.ax.resize(rows * G);
  s.ah.resize(rows * G);
  s.nx.resize(G);
  s.nh.resize(G);
  s.gates.resize(G);
  s.chat.resize(H);
  kernels::mat_mat(x, p.value(ids.w_x).data(), s.ax.data(), rows, in_dim, G);
  kernels::mat_mat(h, p.value(ids.w_h).data(), s.ah.data(), rows, H, G);
  const T* gx = p.value(ids.gain_x).data();
  const T* gh = p.value(ids.gain_h).data();
  const T* b = p.value(ids.bias).data();
  const T* gc = p.value(ids.gain_c).data();
  const T* bc = p.value(ids.bias_c).data();
  for (std::size_t r = 0; r < rows; ++r) {
    kernels::standardize<T>({s.ax.data() + r * G, G}, s.nx);
    kernels::standardize<T>({s.ah.data() + r * G, G}, s.nh);
    T* a = s.gates.data();
    for (std::size_t j = 0; j < G; ++j) {
      const T lx = gx[j] * s.nx[j] + T{0};
      const T lh = gh[j] * s.nh[j] + T{0};
      a[j] = (lx + lh) + b[j];
    }
    T* cr = c + r * H;
    T* hr = h + r * H;
    for (std::size_t j = 0; j < H; ++j) {
      const T i = kernels::sigmoid(a[j]);
      const T f = kernels::sigmoid(a[H + j]);
      const T g = std::tanh(a[2 * H + j]);
      cr[j] = f * cr[j] + i * g;
    }
    kernels::standardize<T>({cr, H}, s.chat);
    for (std::size_t j = 0; j < H; ++j) {
      const T o = kernels::sigmoid(a[3 * H + j]);
      hr[j] = o * std::tanh(gc[j] * s.chat[j] + bc[j]);
    }
  }
}

// Logits for `rows` stacked top-layer states.
template <typename T>
void output_rows(const ParamStore<T>& p, const ModelParamIds& ids, const ModelConfig& cfg, const T* h2,
                 const Tensor<T>& seg3, std::size_t rows, Scratch<T>& s) {
  const std::size_t H = cfg.hidden_dim, L = cfg.lang_embed_dim, D = cfg.pre_softmax(), V = cfg.vocab_size;
  s.z.resize(rows * (H + L));
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(h2 + r * H, H, s.z.data() + r * (H + L));
    std::copy_n(seg3.data(), L, s.z.data() + r * (H + L) + H);
  }
  s.hid.resize(rows * D);
  kernels::mat_mat(s.z.data(), p.value(ids.hidden_w).data(), s.hid.data(), rows, H + L, D);
  const T* hb = p.value(ids.hidden_b).data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < D; ++j) s.hid[r * D + j] = std::tanh(s.hid[r * D + j] + hb[j]);
  }
  s.logits.resize(rows * V);
  kernels::mat_mat(s.hid.data(), p.value(ids.output_w).data(), s.logits.data(), rows, D, V);
  const T* ob = p.value(ids.output_b).data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < V; ++j) s.logits[r * V + j] += ob[j];
  }
}

}  // namespace

template <typename T>
Model<T>::Model(ModelConfig config, ParamStore<T> params) : config_(config), params_(std::move(params)) {
  config_.validate();
  const auto layout = param_layout(config_);
  if (params_.size() != layout.size()) {
    throw ConfigError("model expects " + std::to_string(layout.size()) + " parameters, got " +
                      std::to_string(params_.size()));
  }
  for (const auto& spec : layout) {
    if (!params_.contains(spec.name)) throw ConfigError("missing model parameter '" + spec.name + "'");
    const auto& shape = params_.value(params_.id(spec.name)).shape();
    if (!(shape == spec.shape)) {
      throw ConfigError("parameter '" + spec.name + "' has shape " + shape.str() + ", expected " + spec.shape.str());
    }
  }
  ids_.char_embed = params_.id("char_embed");
  for (std::size_t k = 0; k < 3; ++k) {
    ids_.lang_embed[k] = params_.id(config_.tie_language_embeddings ? "lang_embed" : kSegmentNames[k]);
  }
  for (std::size_t layer = 0; layer < 2; ++layer) {
    const std::string p = "lstm" + std::to_string(layer + 1) + ".";
    auto& l = ids_.lstm[layer];
    l.w_x = params_.id(p + "w_x");
    l.w_h = params_.id(p + "w_h");
    l.bias = params_.id(p + "bias");
    l.gain_x = params_.id(p + "ln_x.gain");
    l.gain_h = params_.id(p + "ln_h.gain");
    l.gain_c = params_.id(p + "ln_c.gain");
    l.bias_c = params_.id(p + "ln_c.bias");
  }
  ids_.hidden_w = params_.id("pre_softmax.w");
  ids_.hidden_b = params_.id("pre_softmax.bias");
  ids_.output_w = params_.id("output.w");
  ids_.output_b = params_.id("output.bias");
}

template <typename T>
Model<T> Model<T>::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gaussian(0.0, kEmbeddingStddev);
  ParamStore<T> store;
  for (const auto& spec : param_layout(config)) {
    Tensor<T> t(spec.shape);
    switch (spec.init) {
      case Init::kGlorot: {
        const double limit = std::sqrt(6.0 / static_cast<double>(spec.shape[0] + spec.shape[1]));
        std::uniform_real_distribution<double> uniform(-limit, limit);
        for (auto& v : t.values()) v = static_cast<T>(uniform(rng));
        break;
      }
      case Init::kGaussian:
        for (auto& v : t.values()) v = static_cast<T>(gaussian(rng));
        break;
      case Init::kZero:
        break;
      case Init::kOne:
        t.fill(T{1});
        break;
      case Init::kGateBias: {
        const std::size_t H = spec.shape[0] / 4;
        for (std::size_t j = H; j < 2 * H; ++j) t[j] = static_cast<T>(kForgetGateBias);
        break;
      }
    }
    store.add(spec.name, std::move(t));
  }
  return Model(config, std::move(store));
}

template <typename T>
Model<T> Model<T>::zeros(const ModelConfig& config) {
  config.validate();
  ParamStore<T> store;
  for (const auto& spec : param_layout(config)) store.add(spec.name, Tensor<T>(spec.shape));
  return Model(config, std::move(store));
}

template <typename T>
LanguageVector<T> Model<T>::language_vector(std::size_t language) const {
  if (language >= config_.num_languages) {
    throw IndexError("language id " + std::to_string(language) + " outside [0, " +
                     std::to_string(config_.num_languages) + ")");
  }
  LanguageVector<T> out;
  for (std::size_t k = 0; k < config_.num_segments(); ++k) {
    const auto row = params_.value(ids_.lang_embed[k]).row(language);
    out.segments.emplace_back(Shape{row.size()}, std::vector<T>(row.begin(), row.end()));
  }
  return out;
}

template <typename T>
void Model<T>::set_language_vector(std::size_t language, const LanguageVector<T>& vector) {
  check_language(vector);
  if (language >= config_.num_languages) {
    throw IndexError("language id " + std::to_string(language) + " outside [0, " +
                     std::to_string(config_.num_languages) + ")");
  }
  for (std::size_t k = 0; k < config_.num_segments(); ++k) {
    auto row = params_.value(ids_.lang_embed[k]).row(language);
    std::copy(vector.segments[k].values().begin(), vector.segments[k].values().end(), row.begin());
  }
}

template <typename T>
void Model<T>::check_language(const LanguageVector<T>& lang) const {
  if (lang.segments.size() != config_.num_segments()) {
    throw DimensionError("language vector has " + std::to_string(lang.segments.size()) + " segments, model expects " +
                         std::to_string(config_.num_segments()));
  }
  for (const auto& s : lang.segments) {
    if (s.size() != config_.lang_embed_dim) {
      throw DimensionError("language segment of size " + std::to_string(s.size()) + ", model expects " +
                           std::to_string(config_.lang_embed_dim));
    }
  }
}

template <typename T>
RecurrentState<T> Model<T>::initial_state() const {
  RecurrentState<T> s;
  for (std::size_t layer = 0; layer < 2; ++layer) {
    s.h[layer].assign(config_.hidden_dim, T{0});
    s.c[layer].assign(config_.hidden_dim, T{0});
  }
  return s;
}

template <typename T>
Tensor<T> Model<T>::forward_step(RecurrentState<T>& state, TokenId input, const LanguageVector<T>& lang) const {
  if (input < 0 || static_cast<std::size_t>(input) >= config_.vocab_size) {
    throw IndexError("character id " + std::to_string(input) + " outside vocabulary of size " +
                     std::to_string(config_.vocab_size));
  }
  check_language(lang);
  const std::size_t E = config_.char_embed_dim, H = config_.hidden_dim, L = config_.lang_embed_dim;
  Scratch<T> s;
  s.x.resize(E + L);
  const auto embed = params_.value(ids_.char_embed).row(static_cast<std::size_t>(input));
  std::copy(embed.begin(), embed.end(), s.x.begin());
  std::copy_n(lang.segment(Segment::kLstm1).data(), L, s.x.begin() + E);
  lstm_rows(params_, ids_.lstm[0], H, s.x.data(), E + L, state.h[0].data(), state.c[0].data(), 1, s);
  s.x.resize(H + L);
  std::copy_n(state.h[0].data(), H, s.x.begin());
  std::copy_n(lang.segment(Segment::kLstm2).data(), L, s.x.begin() + H);
  lstm_rows(params_, ids_.lstm[1], H, s.x.data(), H + L, state.h[1].data(), state.c[1].data(), 1, s);
  output_rows(params_, ids_, config_, state.h[1].data(), lang.segment(Segment::kSoftmax), 1, s);
  return Tensor<T>(Shape{config_.vocab_size}, std::move(s.logits));
}

template <typename T>
SequenceNll Model<T>::sequence_nll(const TokenSequence& seq, const LanguageVector<T>& lang) const {
  seq.validate(config_.vocab_size);
  RecurrentState<T> state = initial_state();
  SequenceNll out;
  for (std::size_t t = 0; t + 1 < seq.ids.size(); ++t) {
    const Tensor<T> logits = forward_step(state, seq.ids[t], lang);
    out.nats += softmax_xent(logits, static_cast<std::size_t>(seq.ids[t + 1]));
    ++out.predictions;
  }
  return out;
}

template <typename T>
std::vector<SequenceNll> Model<T>::batch_nll(std::span<const TokenSequence> seqs, const LanguageVector<T>& lang) const {
  check_language(lang);
  for (const auto& seq : seqs) seq.validate(config_.vocab_size);
  const std::size_t B = seqs.size();
  const std::size_t E = config_.char_embed_dim, H = config_.hidden_dim, L = config_.lang_embed_dim,
                    V = config_.vocab_size;
  // Longest first, so the sequences still running at any step form a prefix.
  std::vector<std::size_t> order(B);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return seqs[a].ids.size() > seqs[b].ids.size(); });

  std::vector<SequenceNll> out(B);
  std::vector<T> h1(B * H, T{0}), c1(B * H, T{0}), h2(B * H, T{0}), c2(B * H, T{0});
  std::vector<T> x1(B * (E + L)), x2(B * (H + L));
  Scratch<T> s;
  const auto& embed = params_.value(ids_.char_embed);
  const T* seg1 = lang.segment(Segment::kLstm1).data();
  const T* seg2 = lang.segment(Segment::kLstm2).data();
  std::size_t active = B;
  for (std::size_t t = 0; active > 0; ++t) {
    while (active > 0 && seqs[order[active - 1]].ids.size() <= t + 1) --active;
    if (active == 0) break;
    for (std::size_t r = 0; r < active; ++r) {
      const auto row = embed.row(static_cast<std::size_t>(seqs[order[r]].ids[t]));
      std::copy(row.begin(), row.end(), x1.begin() + r * (E + L));
      std::copy_n(seg1, L, x1.begin() + r * (E + L) + E);
    }
    lstm_rows(params_, ids_.lstm[0], H, x1.data(), E + L, h1.data(), c1.data(), active, s);
    for (std::size_t r = 0; r < active; ++r) {
      std::copy_n(h1.begin() + r * H, H, x2.begin() + r * (H + L));
      std::copy_n(seg2, L, x2.begin() + r * (H + L) + H);
    }
    lstm_rows(params_, ids_.lstm[1], H, x2.data(), H + L, h2.data(), c2.data(), active, s);
    output_rows(params_, ids_, config_, h2.data(), lang.segment(Segment::kSoftmax), active, s);
    for (std::size_t r = 0; r < active; ++r) {
      const auto& seq = seqs[order[r]];
      const std::span<const T> z(s.logits.data() + r * V, V);
      const auto target = static_cast<std::size_t>(seq.ids[t + 1]);
      out[order[r]].nats += kernels::log_sum_exp(z) - static_cast<double>(z[target]);
      ++out[order[r]].predictions;
    }
  }
  return out;
}

template <typename T>
BoundModel Model<T>::bind(Tape<T>& tape, bool trainable) {
  auto b = [&](ParamId id) { return trainable ? tape.param(params_, id) : tape.frozen(params_, id); };
  BoundModel m;
  m.char_embed = b(ids_.char_embed);
  m.lang_embed[0] = b(ids_.lang_embed[0]);
  for (std::size_t k = 1; k < 3; ++k) {
    m.lang_embed[k] = config_.tie_language_embeddings ? m.lang_embed[0] : b(ids_.lang_embed[k]);
  }
  for (std::size_t layer = 0; layer < 2; ++layer) {
    const auto& l = ids_.lstm[layer];
    m.lstm[layer] = {b(l.w_x), b(l.w_h), b(l.bias), b(l.gain_x), b(l.gain_h), b(l.gain_c), b(l.bias_c)};
  }
  m.hidden_w = b(ids_.hidden_w);
  m.hidden_b = b(ids_.hidden_b);
  m.output_w = b(ids_.output_w);
  m.output_b = b(ids_.output_b);
  return m;
}

template <typename T>
BoundModel Model<T>::bind_frozen(Tape<T>& tape) const {
  return const_cast<Model&>(*this).bind(tape, false);
}

template <typename T>
LanguageVars Model<T>::language_vars(Tape<T>& tape, const BoundModel& bound, std::size_t language) const {
  if (language >= config_.num_languages) {
    throw IndexError("language id " + std::to_string(language) + " outside [0, " +
                     std::to_string(config_.num_languages) + ")");
  }
  LanguageVars out;
  out.segments[0] = tape.embedding(bound.lang_embed[0], language);
  for (std::size_t k = 1; k < 3; ++k) {
    out.segments[k] =
        config_.tie_language_embeddings ? out.segments[0] : tape.embedding(bound.lang_embed[k], language);
  }
  return out;
}

template <typename T>
LanguageVars Model<T>::language_vars(Tape<T>& tape, Var full) const {
  const std::size_t L = config_.lang_embed_dim;
  if (tape.value(full).size() != config_.full_lang_dim()) {
    throw DimensionError("language vector of length " + std::to_string(tape.value(full).size()) +
                         ", model expects " + std::to_string(config_.full_lang_dim()));
  }
  LanguageVars out;
  if (config_.tie_language_embeddings) {
    out.segments = {full, full, full};
  } else {
    for (std::size_t k = 0; k < 3; ++k) out.segments[k] = tape.slice(full, k * L, L);
  }
  return out;
}

template <typename T>
Var Model<T>::sequence_loss(Tape<T>& tape, const BoundModel& m, const LanguageVars& lang,
                            const TokenSequence& seq) const {
  seq.validate(config_.vocab_size);
  const std::size_t H = config_.hidden_dim;
  const Tensor<T> zero(Shape{H});
  Var h1 = tape.constant(zero), c1 = tape.constant(zero);
  Var h2 = tape.constant(zero), c2 = tape.constant(zero);
  Var total{};
  for (std::size_t t = 0; t + 1 < seq.ids.size(); ++t) {
    const Var e = tape.embedding(m.char_embed, static_cast<std::size_t>(seq.ids[t]));
    std::tie(h1, c1) = lstm_cell(tape, m.lstm[0], tape.concat(e, lang.segments[0]), h1, c1, H);
    std::tie(h2, c2) = lstm_cell(tape, m.lstm[1], tape.concat(h1, lang.segments[1]), h2, c2, H);
    const Var z = tape.concat(h2, lang.segments[2]);
    const Var hid = tape.tanh(tape.add(tape.matmul(z, m.hidden_w), m.hidden_b));
    const Var logits = tape.add(tape.matmul(hid, m.output_w), m.output_b);
    const Var loss = tape.softmax_xent(logits, static_cast<std::size_t>(seq.ids[t + 1]));
    total = t == 0 ? loss : tape.add(total, loss);
  }
  return total;
}

template class Model<float>;
template class Model<double>;

}  // namespace langvec
