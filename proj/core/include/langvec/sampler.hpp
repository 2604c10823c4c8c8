#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "langvec/corpus.hpp"
#include "langvec/vocabulary.hpp"

namespace langvec {

/// Default cap on ids per training sequence; longer verses are split.
inline constexpr std::size_t kDefaultMaxLength = 512;

/// Draws training examples uniformly over languages, then uniformly over the
/// chosen language's encoded training verses. Language id `i` is
/// `language_table[i]`.
class TrainingSampler {
 public:
  TrainingSampler(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab,
                  std::vector<std::string> language_table, std::size_t max_length = kDefaultMaxLength);

  std::vector<TokenSequence> sample(std::mt19937_64& rng, std::size_t batch_size) const;

  std::size_t num_languages() const { return examples_.size(); }
  const std::vector<TokenSequence>& examples(std::size_t language) const { return examples_[language]; }

 private:
  std::vector<std::string> languages_;
  std::vector<std::vector<TokenSequence>> examples_;
};

/// One batch using the corpus's sorted language order as the id table.
std::vector<TokenSequence> sample_batch(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab,
                                        std::mt19937_64& rng, std::size_t batch_size);

}  // namespace langvec
