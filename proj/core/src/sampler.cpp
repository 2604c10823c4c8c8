#include "langvec/sampler.hpp"

#include "langvec/error.hpp"

namespace langvec {

TrainingSampler::TrainingSampler(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab,
                                 std::vector<std::string> language_table, std::size_t max_length)
    : languages_(std::move(language_table)) {
  if (languages_.empty()) throw ConfigError("no languages to sample from");
  examples_.resize(languages_.size());
  for (std::size_t lang = 0; lang < languages_.size(); ++lang) {
    const auto& verses = corpus.verses(languages_[lang]);
    auto it = split.train.find(languages_[lang]);
    if (it != split.train.end()) {
      for (const auto& id : it->second) {
        for (auto& seq : vocab.encode_sequences(lang, verses.at(id), max_length)) {
          examples_[lang].push_back(std::move(seq));
        }
      }
    }
    if (examples_[lang].empty()) {
      throw ConfigError("language '" + languages_[lang] + "' has no training verses");
    }
  }
}

std::vector<TokenSequence> TrainingSampler::sample(std::mt19937_64& rng, std::size_t batch_size) const {
  std::vector<TokenSequence> batch;
  batch.reserve(batch_size);
  std::uniform_int_distribution<std::size_t> pick_language(0, examples_.size() - 1);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const auto& pool = examples_[pick_language(rng)];
    std::uniform_int_distribution<std::size_t> pick_example(0, pool.size() - 1);
    batch.push_back(pool[pick_example(rng)]);
  }
  return batch;
}

std::vector<TokenSequence> sample_batch(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab,
                                        std::mt19937_64& rng, std::size_t batch_size) {
  return TrainingSampler(corpus, split, vocab, corpus.languages()).sample(rng, batch_size);
}

}  // namespace langvec
