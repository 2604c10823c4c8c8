#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "corpora.hpp"
#include "langvec/evaluation.hpp"
#include "langvec/langspace.hpp"
#include "langvec/synthetic.hpp"
#include "langvec/training.hpp"

namespace langvec {
namespace {

LanguageVector<double> vec(std::initializer_list<double> v) { return {{Tensor<double>::vector(v)}}; }

TEST(Interpolate, EndpointsAndMidpoint) {
  const auto a = vec({0, 2}), b = vec({2, 0});
  EXPECT_EQ(interpolate(a, b, 0.0), a);
  EXPECT_EQ(interpolate(a, b, 1.0), b);
  EXPECT_EQ(interpolate(a, b, 0.5), vec({1, 1}));
}

TEST(Interpolate, IsAffine) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  LanguageVector<double> a, b;
  for (int s = 0; s < 3; ++s) {
    a.segments.push_back(Tensor<double>::vector({n(rng), n(rng), n(rng)}));
    b.segments.push_back(Tensor<double>::vector({n(rng), n(rng), n(rng)}));
  }
  for (double alpha : {0.1, 0.37, 0.5, 0.9}) {
    const auto x = interpolate(a, b, alpha), y = interpolate(b, a, alpha);
    for (int s = 0; s < 3; ++s) {
      for (int i = 0; i < 3; ++i) EXPECT_NEAR(x.segments[s][i] + y.segments[s][i], a.segments[s][i] + b.segments[s][i], 1e-12);
    }
  }
}

TEST(Interpolate, DimensionMismatch) {
  EXPECT_THROW(interpolate(vec({1, 2}), vec({1, 2, 3}), 0.5), DimensionError);
  LanguageVector<double> three{{Tensor<double>::vector({1}), Tensor<double>::vector({1}), Tensor<double>::vector({1})}};
  EXPECT_THROW(interpolate(vec({1}), three, 0.5), DimensionError);
}

TEST(Grid, InclusiveEndpoints) {
  const auto g = parse_grid("0:1:0.01");
  ASSERT_EQ(g.size(), 101u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
  EXPECT_EQ(parse_grid("0:1:0.3").size(), 4u);
  EXPECT_EQ(parse_grid("0.5:0.5:0.1"), std::vector<double>{0.5});
  EXPECT_EQ(parse_grid("0:1:0.1").size(), 11u);
}

TEST(Grid, Malformed) {
  for (const char* bad : {"", "0:1", "0:1:0", "0:1:-1", "1:0:0.1", "a:1:0.1", "0:1:0.1:3", "0:1:0.1x"}) {
    EXPECT_THROW(parse_grid(bad), ConfigError) << bad;
  }
}

class TrainedModel : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SyntheticFamilyConfig fc;
    fc.seed = 42;
    fc.verses = 60;
    family_ = new SyntheticFamily(fc);
    const auto corpus = family_->corpus().subset({"sya", "sye"});
    const auto vocab = build_vocabulary(corpus);
    TrainConfig tc;
    tc.steps = 150;
    tc.batch_size = 8;
    tc.eval_every = 50;
    tc.learning_rate = 0.01;
    ModelConfig mc;
    mc.char_embed_dim = 6;
    mc.hidden_dim = 12;
    mc.lang_embed_dim = 3;
    ckpt_ = new Checkpoint(train(corpus, split_train_test(corpus, 10), vocab, tc, mc).checkpoint);
  }
  static void TearDownTestSuite() {
    delete ckpt_;
    delete family_;
  }

  static SyntheticFamily* family_;
  static Checkpoint* ckpt_;
};
SyntheticFamily* TrainedModel::family_ = nullptr;
Checkpoint* TrainedModel::ckpt_ = nullptr;

TEST_F(TrainedModel, CurveStartsAtLanguageAScore) {
  const auto text = family_->sentences("sya", 10, 3);
  const auto curve = interpolation_curve(*ckpt_, "sya", "sye", text, parse_grid("0:1:0.01"));
  ASSERT_EQ(curve.size(), 101u);
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_LT(curve[i - 1].alpha, curve[i].alpha);
  const auto model = ckpt_->model<float>();
  EXPECT_EQ(curve.front().bits_per_char, score_text(*ckpt_, model.language_vector(0), text));
  EXPECT_EQ(curve.back().bits_per_char, score_text(*ckpt_, model.language_vector(1), text));
  const auto csv = curve_csv(curve);
  EXPECT_TRUE(csv.starts_with("alpha,bits_per_char\n0.0,"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 102);
}

TEST_F(TrainedModel, CurveErrors) {
  const auto text = family_->sentences("sya", 2, 3);
  EXPECT_THROW(interpolation_curve(*ckpt_, "sya", "zzz", text, {0.0}), LookupError);
  EXPECT_THROW(interpolation_curve(*ckpt_, "sya", "sye", {}, {0.0}), ConfigError);
  EXPECT_THROW(interpolation_curve(*ckpt_, "sya", "sye", text, {1.5}), ConfigError);
}

TEST_F(TrainedModel, GreedyEqualsArgmaxRollout) {
  const auto model = ckpt_->model<float>();
  const auto lang = model.language_vector(0);
  SamplerConfig cfg;
  cfg.temperature = 0.0;
  cfg.max_length = 40;
  const auto ids = generate_ids(model, lang, cfg);
  auto state = model.initial_state();
  std::vector<TokenId> expected{Vocabulary::kBos};
  while (expected.size() <= cfg.max_length) {
    const auto z = model.forward_step(state, expected.back(), lang);
    expected.push_back(static_cast<TokenId>(std::max_element(z.values().begin(), z.values().end()) - z.values().begin()));
    if (expected.back() == Vocabulary::kEos) break;
  }
  EXPECT_EQ(ids, expected);
  cfg.seed = 99;  // the seed does not matter when greedy
  EXPECT_EQ(generate_ids(model, lang, cfg), expected);
}

TEST_F(TrainedModel, SamplingIsDeterministicPerSeed) {
  const auto lang = ckpt_->model<float>().language_vector(1);
  SamplerConfig cfg;
  cfg.temperature = 0.5;
  cfg.seed = 17;
  cfg.max_length = 200;
  EXPECT_EQ(generate(*ckpt_, lang, cfg), generate(*ckpt_, lang, cfg));
  const auto ids = generate_ids(ckpt_->model<float>(), lang, cfg);
  EXPECT_LE(ids.size(), cfg.max_length + 1);
}

TEST_F(TrainedModel, HigherTemperatureRaisesPerStepEntropy) {
  const auto model = ckpt_->model<float>();
  const auto lang = model.language_vector(0);
  auto mean_entropy = [&](double tau) {
    std::mt19937_64 rng(5);
    double total = 0.0;
    std::size_t steps = 0;
    while (steps < 10000) {
      auto state = model.initial_state();
      TokenId prev = Vocabulary::kBos;
      for (int t = 0; t < 60 && steps < 10000; ++t) {
        const auto z = model.forward_step(state, prev, lang);
        double top = -INFINITY, norm = 0.0;
        for (float v : z.values()) top = std::max<double>(top, v);
        std::vector<double> p;
        for (float v : z.values()) norm += p.emplace_back(std::exp((v - top) / tau));
        for (double q : p) total -= q / norm * std::log(q / norm);
        ++steps;
        prev = sample_token(z.values(), tau, rng);
        if (prev == Vocabulary::kEos) break;
      }
    }
    return total / double(steps);
  };
  const double cold = mean_entropy(0.5), warm = mean_entropy(1.0), hot = mean_entropy(2.0);
  EXPECT_LE(cold, warm);
  EXPECT_LE(warm, hot);
}

TEST(Sampling, ZeroModelFirstSymbolIsUniform) {
  ModelConfig mc;
  mc.vocab_size = 12;
  mc.char_embed_dim = 3;
  mc.hidden_dim = 4;
  mc.lang_embed_dim = 2;
  const auto model = Model<double>::zeros(mc);
  auto state = model.initial_state();
  const auto z = model.forward_step(state, Vocabulary::kBos, model.language_vector(0));
  std::mt19937_64 rng(2024);
  std::vector<int> counts(12);
  for (int i = 0; i < 10000; ++i) ++counts[sample_token(z.values(), 1.0, rng)];
  const double p = 1.0 / 12, sigma = std::sqrt(10000 * p * (1 - p));
  for (int c : counts) EXPECT_LE(std::abs(c - 10000 * p), 3 * sigma) << c;
}

TEST(Sampling, GreedyTakesTheFirstMaximum) {
  std::mt19937_64 rng(1);
  const std::vector<float> z{0.5f, 2.0f, 2.0f, -1.0f};
  EXPECT_EQ(sample_token(std::span<const float>(z), 0.0, rng), 1);
}

std::string bytes_of(const Checkpoint& c) {
  std::ostringstream out;
  write_checkpoint(c, out);
  return out.str();
}

TEST_F(TrainedModel, EstimationWithZeroStepsReturnsTheStart) {
  EstimationConfig cfg;
  cfg.steps = 0;
  cfg.init_language = "sye";
  const auto r = estimate_vector(*ckpt_, family_->sentences("sya", 8, 9), cfg);
  EXPECT_EQ(r.vector, ckpt_->model<float>().language_vector(1));
  EXPECT_EQ(r.before_bits_per_char, r.after_bits_per_char);
  EXPECT_EQ(r.optimization_sentences, 6u);
  EXPECT_EQ(r.holdout_sentences, 2u);
}

TEST_F(TrainedModel, EstimationNeverTouchesModelParameters) {
  const auto before = bytes_of(*ckpt_);
  EstimationConfig cfg;
  cfg.steps = 20;
  cfg.init_language = "sye";
  const auto r = estimate_vector(*ckpt_, family_->sentences("sya", 12, 4), cfg);
  EXPECT_EQ(bytes_of(*ckpt_), before);
  EXPECT_LE(r.after_bits_per_char, r.before_bits_per_char);
}

TEST_F(TrainedModel, EstimationFromOwnVectorDoesNotWorsen) {
  EstimationConfig cfg;
  cfg.steps = 30;
  cfg.init_language = "sya";
  const auto r = estimate_vector(*ckpt_, family_->sentences("sya", 32, 6), cfg);
  EXPECT_LE(r.after_bits_per_char, r.before_bits_per_char + 1e-6);
}

TEST_F(TrainedModel, EstimationMovesTowardsTheRightLanguage) {
  // Starting from the wrong language, fitting sya text must help.
  EstimationConfig cfg;
  cfg.steps = 60;
  cfg.init_language = "sye";
  const auto r = estimate_vector(*ckpt_, family_->sentences("sya", 32, 8), cfg);
  EXPECT_LT(r.after_bits_per_char, r.before_bits_per_char);
  EXPECT_GT(r.accepted_steps, 0u);
}

TEST_F(TrainedModel, EstimationErrors) {
  EstimationConfig cfg;
  cfg.init_language = "sya";
  EXPECT_THROW(estimate_vector(*ckpt_, {"abc"}, cfg), ConfigError);
  EXPECT_THROW(estimate_vector(*ckpt_, {"abc", ""}, cfg), ConfigError);
  cfg.init_language = "nope";
  EXPECT_THROW(estimate_vector(*ckpt_, {"abc", "def"}, cfg), LookupError);
  cfg.init_vector = {1.0f};
  EXPECT_THROW(estimate_vector(*ckpt_, {"abc", "def"}, cfg), DimensionError);
}

TEST_F(TrainedModel, ClusterCoversEveryLanguage) {
  const auto tree = cluster_languages(*ckpt_);
  EXPECT_EQ(tree.leaf_names(), ckpt_->languages);
  EXPECT_EQ(language_vectors(*ckpt_).front().second.size(), ckpt_->config.full_lang_dim());
}

TEST(Synthetic, FamilyIsDeterministicAndShaped) {
  SyntheticFamilyConfig fc;
  fc.verses = 5;
  const SyntheticFamily a(fc), b(fc);
  EXPECT_EQ(a.languages().size(), 8u);
  EXPECT_EQ(a.sentences("syc", 3, 1), b.sentences("syc", 3, 1));
  EXPECT_NE(a.sentences("syc", 3, 1), a.sentences("syc", 3, 2));
  const auto corpus = a.corpus();
  EXPECT_EQ(corpus.num_languages(), 8u);
  for (const auto& l : corpus.languages()) EXPECT_EQ(corpus.verses(l).size(), 5u);
  const auto tree = DendrogramTree::from_newick(a.newick());
  EXPECT_EQ(tree.leaf_names(), a.languages());
  for (const auto& s : a.sentences(a.unseen_language(), 20, 1)) {
    EXPECT_GE(s.size(), fc.min_length);
    EXPECT_LE(s.size(), fc.max_length);
  }
}

TEST(Synthetic, MixtureRowsAreDistributions) {
  SyntheticFamily f(SyntheticFamilyConfig{});
  const auto m = BigramLanguage::mixture(f.language("sya"), f.language("sye"), 0.5);
  for (const auto& row : m.probabilities()) {
    double total = 0;
    for (double p : row) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

}  // namespace
}  // namespace langvec
