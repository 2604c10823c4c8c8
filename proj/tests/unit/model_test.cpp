#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "langvec/model.hpp"

namespace langvec {
namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.vocab_size = 10;
  c.char_embed_dim = 4;
  c.hidden_dim = 8;
  c.lang_embed_dim = 2;
  c.pre_softmax_dim = 8;
  c.num_languages = 3;
  return c;
}

TokenSequence random_sequence(std::mt19937_64& rng, std::size_t vocab, std::size_t length, std::size_t language = 0) {
  std::uniform_int_distribution<TokenId> pick(static_cast<TokenId>(Vocabulary::kReserved), static_cast<TokenId>(vocab - 1));
  TokenSequence seq{language, {Vocabulary::kBos}};
  for (std::size_t i = 0; i < length; ++i) seq.ids.push_back(pick(rng));
  seq.ids.push_back(Vocabulary::kEos);
  return seq;
}

// Randomizes every parameter so gains, biases and embeddings all carry signal.
template <typename T>
void perturb(Model<T>& model, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  for (std::size_t p = 0; p < model.params().size(); ++p) {
    for (auto& v : model.params().value(ParamId{p}).values()) v += static_cast<T>(n(rng));
  }
}

TEST(ParamCount, MatchesHandComputedShapeSum) {
  ModelConfig c = tiny_config();
  c.num_languages = 1;
  // char 10*4; lang 3*(1*2); lstm1 (6*32 + 8*32 + 32*3 + 8*2); lstm2 (10*32 + 8*32 + 32*3 + 8*2);
  // pre-softmax 10*8 + 8; output 8*10 + 10
  const std::size_t lstm1 = 192 + 256 + 96 + 16;
  const std::size_t lstm2 = 320 + 256 + 96 + 16;
  EXPECT_EQ(count_lstm_parameters(c), lstm1 + lstm2);
  EXPECT_EQ(count_parameters(c), 40 + 6 + lstm1 + lstm2 + 88 + 90);
  EXPECT_EQ(count_parameters(c), Model<float>::zeros(c).params().num_elements());
}

TEST(ParamCount, HalvingHiddenShrinksLstm) {
  ModelConfig c = tiny_config();
  for (std::size_t h = 64; h > 1; h /= 2) {
    c.hidden_dim = h;
    ModelConfig half = c;
    half.hidden_dim = h / 2;
    EXPECT_LT(count_lstm_parameters(half), count_lstm_parameters(c));
  }
}

TEST(ModelConstruction, RejectsWrongShapesAndMissingParameters) {
  const ModelConfig c = tiny_config();
  auto store = Model<float>::zeros(c).params();
  ModelConfig bigger = c;
  bigger.hidden_dim = 9;
  EXPECT_THROW(Model<float>(bigger, store), ConfigError);
  EXPECT_THROW(Model<float>(c, ParamStore<float>{}), ConfigError);
  ModelConfig zero = c;
  zero.lang_embed_dim = 0;
  EXPECT_THROW(Model<float>::zeros(zero), ConfigError);
}

TEST(ModelConstruction, InitializationFollowsScheme) {
  ModelConfig c = tiny_config();
  const auto m = Model<double>::initialize(c, 1);
  const auto& p = m.params();
  const auto& bias = p.value(p.id("lstm1.bias"));
  for (std::size_t j = 0; j < 32; ++j) EXPECT_EQ(bias[j], (j >= 8 && j < 16) ? 1.0 : 0.0);
  for (double g : p.value(p.id("lstm2.ln_x.gain")).values()) EXPECT_EQ(g, 1.0);
  const double limit = std::sqrt(6.0 / (6 + 32));
  for (double w : p.value(p.id("lstm1.w_x")).values()) EXPECT_LE(std::abs(w), limit);
}

TEST(LstmCell, ZeroWeightsGiveZeroState) {
  const ModelConfig c = tiny_config();
  auto model = Model<double>::zeros(c);
  Tape<double> tape;
  const BoundModel m = model.bind(tape, false);
  const Var x = tape.constant(Tensor<double>::vector({0.3, -2, 5, 1, 0.5, 0.7}));
  const Var h = tape.constant(Tensor<double>(Shape{8}, 0.4));
  const Var cell = tape.constant(Tensor<double>(Shape{8}, -0.2));
  const auto [h2, c2] = lstm_cell(tape, m.lstm[0], x, h, cell, 8);
  EXPECT_EQ(tape.value(h2), Tensor<double>(Shape{8}));
  // sigmoid(0) * c + sigmoid(0) * tanh(0) = 0.5 * c
  EXPECT_EQ(tape.value(c2), Tensor<double>(Shape{8}, -0.1));
}

TEST(LstmCell, GradientsMatchFiniteDifferences) {
  ModelConfig c = tiny_config();
  c.hidden_dim = 4;
  auto model = Model<double>::initialize(c, 3);
  perturb(model, 4);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor<double> x(Shape{6}), h(Shape{4}), cell(Shape{4});
  for (auto* t : {&x, &h, &cell}) {
    for (auto& v : t->values()) v = n(rng);
  }
  auto graph = [&](Tape<double>& tape, bool trainable) {
    const BoundModel m = model.bind(tape, trainable);
    const auto [h2, c2] = lstm_cell(tape, m.lstm[0], tape.constant(x), tape.constant(h), tape.constant(cell), 4);
    return tape.add(tape.sum(h2), tape.scale(tape.sum(c2), 0.0));
  };
  model.params().zero_grad();
  Tape<double> tape;
  tape.backward(graph(tape, true));
  const auto r = testing::check_gradients(model.params(), [&] {
    Tape<double> t;
    return t.value(graph(t, false))[0];
  });
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(LstmCell, DeterministicAcrossCalls) {
  auto model = Model<float>::initialize(tiny_config(), 8);
  const auto lang = model.language_vector(1);
  auto s1 = model.initial_state();
  auto s2 = model.initial_state();
  for (TokenId id : {3, 4, 5, 9}) EXPECT_EQ(model.forward_step(s1, id, lang), model.forward_step(s2, id, lang));
  EXPECT_EQ(s1.h, s2.h);
  EXPECT_EQ(s1.c, s2.c);
}

TEST(ForwardStep, ZeroModelIsUniform) {
  const auto model = Model<double>::zeros(tiny_config());
  auto state = model.initial_state();
  const auto logits = model.forward_step(state, 4, model.language_vector(0));
  EXPECT_EQ(logits, Tensor<double>(Shape{10}));
  EXPECT_NEAR(softmax_xent(logits, 3), std::log(10.0), 1e-15);
  EXPECT_THROW(model.forward_step(state, 10, model.language_vector(0)), IndexError);
}

TEST(ForwardStep, LogitsAreLipschitzInLanguageVector) {
  auto model = Model<double>::initialize(tiny_config(), 12);
  perturb(model, 13);
  const auto base = model.language_vector(0);
  std::mt19937_64 rng(14);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto moved = base;
    double norm = 0.0;
    for (auto& s : moved.segments) {
      for (auto& v : s.values()) {
        const double d = 1e-7 * n(rng);
        v += d;
        norm += d * d;
      }
    }
    norm = std::sqrt(norm);
    auto sa = model.initial_state();
    auto sb = model.initial_state();
    for (TokenId id : {0, 5, 7, 3}) {
      const auto a = model.forward_step(sa, id, base);
      const auto b = model.forward_step(sb, id, moved);
      double diff = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
      worst_ratio = std::max(worst_ratio, diff / norm);
    }
  }
  // A finite, modest constant K with |logits(l + d) - logits(l)| <= K |d|.
  EXPECT_LT(worst_ratio, 100.0);
}

TEST(ForwardStep, DistinctLanguagesGiveDistinctLogits) {
  const auto model = Model<float>::initialize(tiny_config(), 2);
  auto sa = model.initial_state();
  auto sb = model.initial_state();
  EXPECT_NE(model.forward_step(sa, 5, model.language_vector(0)), model.forward_step(sb, 5, model.language_vector(1)));
}

TEST(SequenceNll, ZeroModelGivesLogV) {
  const auto model = Model<double>::zeros(tiny_config());
  std::mt19937_64 rng(1);
  const auto seq = random_sequence(rng, 10, 13);
  const auto nll = model.sequence_nll(seq, model.language_vector(2));
  EXPECT_EQ(nll.predictions, 14u);
  EXPECT_NEAR(nll.nats, 14 * std::log(10.0), 1e-12);
}

TEST(SequenceNll, RejectsMalformedSequences) {
  const auto model = Model<float>::zeros(tiny_config());
  const auto lang = model.language_vector(0);
  EXPECT_THROW(model.sequence_nll(TokenSequence{0, {Vocabulary::kBos}}, lang), ContractError);
  EXPECT_THROW(model.sequence_nll(TokenSequence{0, {Vocabulary::kBos, 4}}, lang), ContractError);
  EXPECT_THROW(model.sequence_nll(TokenSequence{0, {Vocabulary::kBos, 11, Vocabulary::kEos}}, lang), ContractError);
}

TEST(SequenceNll, StepwiseBatchedAndRecordedAgree) {
  auto model = Model<float>::initialize(tiny_config(), 21);
  std::mt19937_64 rng(22);
  std::vector<TokenSequence> seqs;
  for (std::size_t len : {0, 5, 17, 3, 17, 9}) seqs.push_back(random_sequence(rng, 10, len));
  const auto lang = model.language_vector(1);
  const auto batched = model.batch_nll(seqs, lang);
  ASSERT_EQ(batched.size(), seqs.size());
  Tape<float> tape;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const auto step = model.sequence_nll(seqs[i], lang);
    EXPECT_EQ(step.predictions, batched[i].predictions);
    EXPECT_NEAR(step.nats, batched[i].nats, 1e-6);
    tape.clear();
    const BoundModel m = model.bind(tape, false);
    const Var loss = model.sequence_loss(tape, m, model.language_vars(tape, m, 1), seqs[i]);
    EXPECT_NEAR(tape.value(loss)[0], step.nats, 1e-4 * (1.0 + step.nats));
  }
}

TEST(SequenceNll, ConcatenationIsAdditive) {
  // nll(x ++ x) = nll(x) + conditional nll of the second half >= nll(x).
  auto model = Model<double>::initialize(tiny_config(), 31);
  std::mt19937_64 rng(32);
  const auto seq = random_sequence(rng, 10, 8);
  TokenSequence twice = seq;
  twice.ids.pop_back();
  twice.ids.insert(twice.ids.end(), seq.ids.begin() + 1, seq.ids.end());
  const auto lang = model.language_vector(0);
  const auto one = model.sequence_nll(seq, lang);
  const auto two = model.sequence_nll(twice, lang);
  EXPECT_EQ(two.predictions, 2 * one.predictions - 1);
  // The first 8 predictions of `twice` coincide with `seq` minus its EOS step.
  auto state = model.initial_state();
  double prefix = 0.0;
  for (std::size_t t = 0; t + 1 < 9; ++t) {
    prefix += softmax_xent(model.forward_step(state, twice.ids[t], lang), static_cast<std::size_t>(twice.ids[t + 1]));
  }
  EXPECT_GE(two.nats, prefix);
  EXPECT_GT(two.nats, 0.0);
}

TEST(SequenceNll, ContinuousAlongInterpolationLine) {
  auto model = Model<double>::initialize(tiny_config(), 41);
  perturb(model, 42);
  std::mt19937_64 rng(43);
  const auto seq = random_sequence(rng, 10, 12);
  const auto a = model.language_vector(0).full();
  const auto b = model.language_vector(2).full();
  auto max_jump = [&](std::size_t points) {
    double prev = 0.0, worst = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
      const double alpha = static_cast<double>(k) / static_cast<double>(points - 1);
      std::vector<double> v(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) v[i] = (1 - alpha) * a[i] + alpha * b[i];
      const double nll = model.sequence_nll(seq, LanguageVector<double>::from_full(v, 3)).nats;
      if (k) worst = std::max(worst, std::abs(nll - prev));
      prev = nll;
    }
    return worst;
  };
  const double coarse = max_jump(101);
  const double fine = max_jump(1001);
  EXPECT_LT(fine, coarse);
  EXPECT_LT(fine, 0.2 * coarse);
}

TEST(TiedEmbeddings, AllInjectionPointsShareOneVector) {
  ModelConfig c = tiny_config();
  c.tie_language_embeddings = true;
  auto model = Model<double>::initialize(c, 5);
  EXPECT_EQ(model.params().size(), Model<double>::initialize(tiny_config(), 5).params().size() - 2);
  const auto lang = model.language_vector(1);
  ASSERT_TRUE(lang.tied());
  EXPECT_EQ(lang.segment(Segment::kLstm1), lang.segment(Segment::kLstm2));
  EXPECT_EQ(lang.segment(Segment::kLstm2), lang.segment(Segment::kSoftmax));
  Tape<double> tape;
  const BoundModel m = model.bind(tape, false);
  const LanguageVars vars = model.language_vars(tape, m, 1);
  EXPECT_EQ(tape.value(vars.segments[0]), tape.value(vars.segments[1]));
  EXPECT_EQ(tape.value(vars.segments[1]), tape.value(vars.segments[2]));
}

// Full-model gradient fidelity on V=10, E=4, H=8, L=2, D=8, N=3.
TEST(FullModel, GradientsMatchFiniteDifferences) {
  const auto start = std::chrono::steady_clock::now();
  for (bool tied : {false, true}) {
    ModelConfig c = tiny_config();
    c.tie_language_embeddings = tied;
    auto model = Model<double>::initialize(c, 51);
    perturb(model, 52, 0.2);
    std::mt19937_64 rng(53);
    std::vector<TokenSequence> batch;
    for (std::size_t lang = 0; lang < 3; ++lang) batch.push_back(random_sequence(rng, 10, 6, lang));
    std::size_t chars = 0;
    for (const auto& s : batch) chars += s.predictions();

    model.params().zero_grad();
    Tape<double> tape;
    for (const auto& seq : batch) {
      tape.clear();
      const BoundModel m = model.bind(tape, true);
      tape.backward(model.sequence_loss(tape, m, model.language_vars(tape, m, seq.language), seq),
                    1.0 / static_cast<double>(chars));
    }
    // The oracle scores through the unrecorded stepwise path.
    const auto r = testing::check_gradients(model.params(), [&] {
      double total = 0.0;
      for (const auto& seq : batch) total += model.sequence_nll(seq, model.language_vector(seq.language)).nats;
      return total / static_cast<double>(chars);
    });
    EXPECT_LT(r.max_rel_error, 1e-4) << (tied ? "tied: " : "untied: ") << r.worst;
    EXPECT_EQ(r.checked, model.params().num_elements());
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 60.0);
}

}  // namespace
}  // namespace langvec
