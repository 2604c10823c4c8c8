#include "langvec/vocabulary.hpp"

#include <algorithm>
#include <map>

#include "langvec/error.hpp"
#include "langvec/utf8.hpp"

namespace langvec {

void TokenSequence::validate(std::size_t vocab_size) const {
  if (ids.size() < 2 || ids.front() != Vocabulary::kBos || ids.back() != Vocabulary::kEos) {
    throw ContractError("token sequence must start with BOS and end with EOS");
  }
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      throw ContractError("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(vocab_size));
    }
  }
}

Vocabulary::Vocabulary(std::vector<char32_t> symbols) : symbols_(std::move(symbols)) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!ids_.emplace(symbols_[i], static_cast<TokenId>(kReserved + i)).second) {
      throw ContractError("duplicate vocabulary symbol U+" + std::to_string(static_cast<std::uint32_t>(symbols_[i])));
    }
  }
}

TokenId Vocabulary::id(char32_t symbol) const {
  auto it = ids_.find(symbol);
  return it == ids_.end() ? kUnk : it->second;
}

char32_t Vocabulary::symbol(TokenId id) const {
  if (id < static_cast<TokenId>(kReserved) || static_cast<std::size_t>(id) >= size()) {
    throw IndexError("token id " + std::to_string(id) + " has no symbol");
  }
  return symbols_[static_cast<std::size_t>(id) - kReserved];
}

std::vector<TokenId> Vocabulary::encode(std::string_view utf8_text) const {
  const std::u32string scalars = utf8::decode_or_throw(utf8_text, "encode");
  std::vector<TokenId> out;
  out.reserve(scalars.size());
  for (char32_t c : scalars) out.push_back(id(c));
  return out;
}

std::vector<TokenSequence> Vocabulary::encode_sequences(std::size_t language, std::string_view utf8_text,
                                                        std::size_t max_length) const {
  if (max_length < 3) throw ConfigError("maximum sequence length must be at least 3");
  const std::vector<TokenId> body = encode(utf8_text);
  const std::size_t piece = max_length - 2;
  std::vector<TokenSequence> out;
  std::size_t begin = 0;
  do {
    const std::size_t end = std::min(body.size(), begin + piece);
    TokenSequence seq{language, {}};
    seq.ids.reserve(end - begin + 2);
    seq.ids.push_back(kBos);
    seq.ids.insert(seq.ids.end(), body.begin() + static_cast<std::ptrdiff_t>(begin),
                   body.begin() + static_cast<std::ptrdiff_t>(end));
    seq.ids.push_back(kEos);
    out.push_back(std::move(seq));
    begin = end;
  } while (begin < body.size());
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id == kBos || id == kEos) continue;
    if (id == kUnk) {
      utf8::append(out, U'\uFFFD');
      continue;
    }
    utf8::append(out, symbol(id));
  }
  return out;
}

Vocabulary build_vocabulary(const VerseCorpus& corpus, std::size_t cap) {
  if (cap < 4) throw ConfigError("vocabulary cap must be at least 4");
  std::map<char32_t, std::size_t> counts;
  for (const auto& lang : corpus.languages()) {
    for (const auto& [id, text] : corpus.verses(lang)) {
      for (char32_t c : utf8::decode_or_throw(text, lang + ":" + id)) ++counts[c];
    }
  }
  std::vector<std::pair<char32_t, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), cap - Vocabulary::kReserved);
  std::vector<char32_t> symbols;
  symbols.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) symbols.push_back(ranked[i].first);
  return Vocabulary(std::move(symbols));
}

}  // namespace langvec
