#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "corpora.hpp"
#include "langvec/evaluation.hpp"

namespace langvec {
namespace {

using testing::make_corpus;

VerseCorpus three_languages() {
  return make_corpus({
      {"aaa", {{"v1", "ab ab"}, {"v2", "ba ba"}, {"v3", "aabb"}, {"v4", "abba"}}},
      {"bbb", {{"v1", "cd"}, {"v2", "dc dc"}, {"v3", "ccdd"}, {"v4", "dcd"}}},
      {"ccc", {{"v1", "ef fe"}, {"v2", "fe"}, {"v3", "eeff"}, {"v4", "fef"}}},
  });
}

ModelConfig tiny() {
  ModelConfig m;
  m.char_embed_dim = 3;
  m.hidden_dim = 6;
  m.lang_embed_dim = 2;
  return m;
}

Checkpoint checkpoint_for(const VerseCorpus& corpus, const Vocabulary& vocab, std::uint64_t seed, bool zero = false) {
  Checkpoint c;
  c.config = tiny();
  c.config.vocab_size = vocab.size();
  c.config.num_languages = corpus.num_languages();
  c.vocab = vocab;
  c.languages = corpus.languages();
  c.params = zero ? Model<float>::zeros(c.config).params() : Model<float>::initialize(c.config, seed).params();
  return c;
}

TEST(Evaluate, ZeroModelScoresLog2VEverywhere) {
  const auto corpus = three_languages();
  const auto vocab = build_vocabulary(corpus);
  const auto split = split_train_test(corpus, 2);
  const auto report = evaluate(checkpoint_for(corpus, vocab, 0, true), corpus, split);
  ASSERT_EQ(report.languages.size(), 3u);
  for (const auto& s : report.languages) EXPECT_NEAR(s.bits_per_char, std::log2(double(vocab.size())), 1e-9);
  EXPECT_NEAR(report.mean_bits_per_char, std::log2(double(vocab.size())), 1e-9);
}

TEST(Evaluate, BitsAreNatsOverLn2) {
  const auto corpus = three_languages();
  const auto vocab = build_vocabulary(corpus);
  const auto report = evaluate(checkpoint_for(corpus, vocab, 5), corpus, split_train_test(corpus, 2));
  for (const auto& s : report.languages) {
    EXPECT_GT(s.chars, 0u);
    EXPECT_DOUBLE_EQ(s.bits_per_char, s.nats_per_char / std::log(2.0));
    EXPECT_DOUBLE_EQ(s.nats_per_char, s.total_nats / double(s.chars));
    EXPECT_GE(s.bits_per_char, 0.0);
  }
}

TEST(Evaluate, StepwiseAndBatchedAgree) {
  const auto corpus = three_languages();
  const auto vocab = build_vocabulary(corpus);
  const auto split = split_train_test(corpus, 3);
  const auto ckpt = checkpoint_for(corpus, vocab, 9);
  const auto a = evaluate(ckpt, corpus, split, {}, EvalPath::kBatched);
  const auto b = evaluate(ckpt, corpus, split, {}, EvalPath::kStepwise);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a.languages[i].bits_per_char, b.languages[i].bits_per_char, 1e-6);
}

TEST(Evaluate, InvariantUnderHeldOutOrder) {
  const auto corpus = three_languages();
  const auto vocab = build_vocabulary(corpus);
  const auto ckpt = checkpoint_for(corpus, vocab, 4);
  const auto a = evaluate(ckpt, corpus, SplitSpec::with_held_out(corpus, {"v1", "v2", "v3"}));
  const auto b = evaluate(ckpt, corpus, SplitSpec::with_held_out(corpus, {"v3", "v1", "v2"}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a.languages[i].bits_per_char, b.languages[i].bits_per_char, 1e-12);
}

TEST(Evaluate, UnknownLanguageListsKnownCodes) {
  const auto corpus = three_languages();
  const auto vocab = build_vocabulary(corpus);
  try {
    evaluate(checkpoint_for(corpus, vocab, 1), corpus, split_train_test(corpus, 1), {"zzz"});
    FAIL();
  } catch (const LookupError& e) {
    const std::string msg = e.what();
    for (const char* code : {"aaa", "bbb", "ccc", "zzz"}) EXPECT_NE(msg.find(code), std::string::npos) << msg;
  }
}

TEST(Evaluate, SubsetOfLanguagesInRequestedOrder) {
  const auto corpus = three_languages();
  const auto vocab = build_vocabulary(corpus);
  const auto r = evaluate(checkpoint_for(corpus, vocab, 1), corpus, split_train_test(corpus, 1), {"ccc", "aaa"});
  ASSERT_EQ(r.languages.size(), 2u);
  EXPECT_EQ(r.languages[0].language, "ccc");
  EXPECT_EQ(r.at("aaa").language, "aaa");
  EXPECT_THROW(r.at("bbb"), LookupError);
}

TEST(ReportCsv, Schema) {
  const auto corpus = three_languages();
  const auto vocab = build_vocabulary(corpus);
  const auto csv = report_csv(evaluate(checkpoint_for(corpus, vocab, 0, true), corpus, split_train_test(corpus, 1)));
  EXPECT_TRUE(csv.starts_with("language,heldout_chars,bits_per_char,nats_per_char\naaa,"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TrainConfig fast_train() {
  TrainConfig t;
  t.steps = 3;
  t.batch_size = 2;
  t.eval_every = 3;
  return t;
}

TEST(Capacity, ScheduleOfOneGivesRowsForFirstLanguageOnly) {
  const auto corpus = three_languages();
  const auto vocab = build_vocabulary(corpus);
  CapacityPlan plan;
  plan.languages = {"bbb", "aaa", "ccc"};
  plan.schedule = {1};
  plan.train = fast_train();
  plan.model = tiny();
  const auto rows = capacity_experiment(corpus, split_train_test(corpus, 1), vocab, plan);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].language, "bbb");
  EXPECT_EQ(rows[0].num_languages, 1u);
}

TEST(Capacity, RowCountIsSumOfLanguagesPresent) {
  const auto corpus = three_languages();
  const auto vocab = build_vocabulary(corpus);
  CapacityPlan plan;
  plan.languages = {"aaa", "bbb", "ccc"};
  plan.schedule = {1, 2, 3};
  plan.train = fast_train();
  plan.model = tiny();
  const auto rows = capacity_experiment(corpus, split_train_test(corpus, 1), vocab, plan);
  EXPECT_EQ(rows.size(), 6u);
  const auto csv = capacity_csv(rows);
  EXPECT_TRUE(csv.starts_with("num_languages,language,heldout_bits_per_char\n1,aaa,"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST(Capacity, TrackedLanguagesFilterRows) {
  const auto corpus = three_languages();
  const auto vocab = build_vocabulary(corpus);
  CapacityPlan plan;
  plan.languages = {"aaa", "bbb", "ccc"};
  plan.schedule = {1, 3};
  plan.tracked = {"ccc"};
  plan.train = fast_train();
  plan.model = tiny();
  const auto rows = capacity_experiment(corpus, split_train_test(corpus, 1), vocab, plan);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].num_languages, 3u);
}

TEST(Capacity, RandomOrderIsSeeded) {
  CapacityPlan plan;
  plan.languages = {"a", "b", "c", "d", "e", "f", "g", "h"};
  plan.order = OrderMode::kRandom;
  plan.seed = 11;
  EXPECT_EQ(plan.resolved_order(), plan.resolved_order());
  auto sorted = plan.resolved_order();
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, plan.languages);
  plan.order = OrderMode::kGiven;
  EXPECT_EQ(plan.resolved_order(), plan.languages);
}

TEST(Capacity, InvalidSchedules) {
  CapacityPlan plan;
  plan.languages = {"a", "b"};
  plan.schedule = {2, 1};
  EXPECT_THROW(plan.validate(), ConfigError);
  plan.schedule = {1, 3};
  EXPECT_THROW(plan.validate(), ConfigError);
  plan.schedule = {};
  EXPECT_THROW(plan.validate(), ConfigError);
  plan.schedule = {1, 2};
  EXPECT_NO_THROW(plan.validate());
}

TEST(Capacity, RunSeedsDifferPerRun) {
  EXPECT_NE(run_seed(1, 1), run_seed(1, 2));
  EXPECT_NE(run_seed(1, 1), run_seed(2, 1));
  EXPECT_EQ(run_seed(3, 4), run_seed(3, 4));
}

TEST(Shrink, TwoSizesGiveTwoRowsWithExactCounts) {
  const auto corpus = three_languages();
  const auto vocab = build_vocabulary(corpus);
  ShrinkPlan plan;
  plan.language = "aaa";
  plan.hidden_sizes = {8, 4};
  plan.train = fast_train();
  plan.model = tiny();
  const auto rows = shrink_experiment(corpus, split_train_test(corpus, 1), vocab, plan);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    ModelConfig mc = tiny();
    mc.vocab_size = vocab.size();
    mc.hidden_dim = r.hidden_size;
    EXPECT_EQ(r.total_params, count_parameters(mc));
    EXPECT_EQ(r.lstm_params, count_lstm_parameters(mc));
  }
  EXPECT_GT(rows[0].lstm_params, rows[1].lstm_params);
  const auto csv = shrink_csv(rows);
  EXPECT_TRUE(csv.starts_with("hidden_size,total_params,lstm_params,heldout_bits_per_char\n8,"));
}

TEST(Shrink, HalvingSchedule) {
  EXPECT_EQ(halving_schedule(64, 4), (std::vector<std::size_t>{64, 32, 16, 8}));
  EXPECT_EQ(halving_schedule(3, 5), (std::vector<std::size_t>{3, 1}));
  ShrinkPlan plan;
  plan.language = "x";
  plan.hidden_sizes = {4, 4};
  EXPECT_THROW(plan.validate(), ConfigError);
}

}  // namespace
}  // namespace langvec
