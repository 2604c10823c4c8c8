#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "langvec/corpus.hpp"

namespace langvec {

using TokenId = std::int32_t;

/// One training or evaluation example: BOS, character ids, EOS.
struct TokenSequence {
  std::size_t language = 0;
  std::vector<TokenId> ids;

  /// Number of predicted positions (everything after BOS).
  std::size_t predictions() const { return ids.empty() ? 0 : ids.size() - 1; }
  /// Throws ContractError unless the sequence is BOS ... EOS with ids below `vocab_size`.
  void validate(std::size_t vocab_size) const;
};

/// Character vocabulary with three reserved ids.
class Vocabulary {
 public:
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr std::size_t kReserved = 3;
  static constexpr std::size_t kDefaultCap = 1000;

  Vocabulary() = default;
  /// `symbols[i]` receives id `kReserved + i`. Duplicates are rejected.
  explicit Vocabulary(std::vector<char32_t> symbols);

  std::size_t size() const { return kReserved + symbols_.size(); }
  const std::vector<char32_t>& symbols() const { return symbols_; }

  TokenId id(char32_t symbol) const;
  /// Throws IndexError for ids outside the vocabulary.
  char32_t symbol(TokenId id) const;

  /// Character ids only, unknown symbols mapped to UNK.
  std::vector<TokenId> encode(std::string_view utf8_text) const;
  /// Encodes `text` as one or more BOS ... EOS sequences of at most
  /// `max_length` ids each (consecutive pieces of the text).
  std::vector<TokenSequence> encode_sequences(std::size_t language, std::string_view utf8_text,
                                              std::size_t max_length) const;
  /// BOS and EOS are dropped, UNK becomes U+FFFD.
  std::string decode(std::span<const TokenId> ids) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.symbols_ == b.symbols_; }

 private:
  std::vector<char32_t> symbols_;
  std::unordered_map<char32_t, TokenId> ids_;
};

/// The `cap - 3` most frequent scalars of the corpus (ties by code point).
Vocabulary build_vocabulary(const VerseCorpus& corpus, std::size_t cap = Vocabulary::kDefaultCap);

}  // namespace langvec
