#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "langvec/corpus.hpp"

namespace langvec {

/// A character-bigram language over 16 letters and space. Row 0 of the
/// transition matrix is the sentence start, row 1 + k follows symbol k.
class BigramLanguage {
 public:
  static constexpr std::size_t kSymbols = 17;
  static constexpr std::size_t kRows = kSymbols + 1;
  using Matrix = std::array<std::array<double, kSymbols>, kRows>;

  /// Row-wise softmax of `logits`.
  static BigramLanguage from_logits(const Matrix& logits);
  /// Row-wise mixture of the two transition distributions.
  static BigramLanguage mixture(const BigramLanguage& a, const BigramLanguage& b, double weight_b);

  const Matrix& probabilities() const { return probs_; }
  static char32_t symbol(std::size_t k);

  /// A sentence of exactly `length` symbols.
  std::string sample(std::mt19937_64& rng, std::size_t length) const;

 private:
  Matrix probs_{};
};

struct SyntheticFamilyConfig {
  std::uint64_t seed = 1;
  std::size_t verses = 300;
  std::size_t min_length = 20;
  std::size_t max_length = 50;
  double root_scale = 1.0;
  /// Languages differ only along this many directions in logit space.
  std::size_t latent_dim = 6;
  /// Noise added to the latent on the edges below the root, one entry per tree level.
  std::array<double, 3> edge_scale = {1.0, 0.7, 0.5};
  /// The unseen language mixes the logits of the first leaf and the first leaf
  /// of its sister clade with this weight on the latter, plus noise.
  double unseen_mix = 0.4;
  double unseen_scale = 0.2;
};

/// Eight languages at the leaves of a balanced binary tree, a latent drifting
/// down the edges and mapped linearly into bigram logits, plus a ninth
/// unseen one lying between the first and third leaves.
class SyntheticFamily {
 public:
  explicit SyntheticFamily(const SyntheticFamilyConfig& config);

  const std::vector<std::string>& languages() const { return codes_; }
  const std::string& unseen_language() const { return unseen_code_; }
  /// Training language the unseen one leans towards.
  const std::string& unseen_relative() const { return codes_[config_.unseen_mix <= 0.5 ? 0 : 2]; }
  /// True topology over `languages()`.
  std::string newick() const;

  const BigramLanguage& language(const std::string& code) const;

  /// `verses` numbered verses per training language, shared ids across languages.
  VerseCorpus corpus() const;
  /// Fresh sentences of one language (or of a bigram mixture) from their own stream.
  std::vector<std::string> sentences(const std::string& code, std::size_t count, std::uint64_t stream) const;
  std::vector<std::string> sentences(const BigramLanguage& language, std::size_t count, std::uint64_t stream) const;

 private:
  SyntheticFamilyConfig config_;
  std::vector<std::string> codes_;
  std::string unseen_code_;
  std::vector<BigramLanguage> leaves_;  // the unseen language last
};

}  // namespace langvec
