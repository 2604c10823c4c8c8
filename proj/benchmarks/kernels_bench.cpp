#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "langvec/model.hpp"
#include "langvec/tape.hpp"
#include "langvec/tensor.hpp"
#include "langvec/vocabulary.hpp"

namespace {

using langvec::Model;
using langvec::ModelConfig;
using langvec::Tensor;
using langvec::TokenSequence;

Tensor<float> random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  Tensor<float> t({r, c});
  for (auto& x : t.values()) x = d(rng);
  return t;
}

ModelConfig config(std::size_t hidden) {
  ModelConfig c;
  c.vocab_size = 40;
  c.char_embed_dim = 16;
  c.hidden_dim = hidden;
  c.lang_embed_dim = 8;
  c.num_languages = 4;
  return c;
}

std::vector<TokenSequence> sequences(std::size_t count, std::size_t length, std::size_t vocab) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<langvec::TokenId> sym(langvec::Vocabulary::kReserved, static_cast<int>(vocab) - 1);
  std::vector<TokenSequence> out(count);
  for (auto& s : out) {
    s.ids.push_back(langvec::Vocabulary::kBos);
    for (std::size_t i = 0; i < length; ++i) s.ids.push_back(sym(rng));
    s.ids.push_back(langvec::Vocabulary::kEos);
  }
  return out;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(langvec::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(256);

void BM_ForwardStep(benchmark::State& state) {
  const auto model = Model<float>::initialize(config(state.range(0)), 1);
  const auto lang = model.language_vector(0);
  auto st = model.initial_state();
  langvec::TokenId in = 5;
  for (auto _ : state) {
    auto logits = model.forward_step(st, in, lang);
    benchmark::DoNotOptimize(logits.data());
    in = 3 + (in + 1) % 30;
  }
}
BENCHMARK(BM_ForwardStep)->Arg(32)->Arg(64)->Arg(128);

// Recorded forward plus backward over one 64-character sequence.
void BM_SequenceForwardBackward(benchmark::State& state) {
  auto model = Model<float>::initialize(config(state.range(0)), 1);
  const auto seq = sequences(1, 64, 40).front();
  langvec::Tape<float> tape;
  for (auto _ : state) {
    tape.clear();
    const auto bound = model.bind(tape, true);
    const auto lang = model.language_vars(tape, bound, 0);
    const auto loss = model.sequence_loss(tape, bound, lang, seq);
    tape.backward(loss);
  }
  state.SetItemsProcessed(state.iterations() * seq.predictions());
}
BENCHMARK(BM_SequenceForwardBackward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_EvalBatched(benchmark::State& state) {
  const auto model = Model<float>::initialize(config(64), 1);
  const auto lang = model.language_vector(0);
  const auto seqs = sequences(static_cast<std::size_t>(state.range(0)), 48, 40);
  for (auto _ : state) benchmark::DoNotOptimize(model.batch_nll(seqs, lang));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 49);
}
BENCHMARK(BM_EvalBatched)->Arg(1)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_EvalStepwise(benchmark::State& state) {
  const auto model = Model<float>::initialize(config(64), 1);
  const auto lang = model.language_vector(0);
  const auto seqs = sequences(static_cast<std::size_t>(state.range(0)), 48, 40);
  for (auto _ : state) {
    for (const auto& s : seqs) benchmark::DoNotOptimize(model.sequence_nll(s, lang));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 49);
}
BENCHMARK(BM_EvalStepwise)->Arg(1)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
