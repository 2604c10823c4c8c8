#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "langvec/error.hpp"

namespace langvec {

/// Multi-parallel text keyed by (language code, verse id).
///
/// Several translations of one language are concatenated: when a verse id is
/// already present for that language, the new copy is stored under
/// `<id>#2`, `<id>#3`, ... so every translation remains a training example.
class VerseCorpus {
 public:
  using VerseMap = std::map<std::string, std::string>;

  /// Stores a verse and returns the id it was stored under.
  std::string add_verse(const std::string& language, const std::string& verse_id, std::string text);
  void add_source(const std::string& language, std::string source_name);

  /// Sorted language codes.
  const std::vector<std::string>& languages() const { return languages_; }
  std::size_t num_languages() const { return languages_.size(); }
  bool has_language(std::string_view language) const;
  /// Throws LookupError for unknown languages.
  const VerseMap& verses(std::string_view language) const;
  const std::vector<std::string>& sources(std::string_view language) const;
  std::size_t total_verses() const;

  /// Corpus restricted to `languages` (each must exist).
  VerseCorpus subset(const std::vector<std::string>& languages) const;

 private:
  std::map<std::string, VerseMap, std::less<>> texts_;
  std::map<std::string, std::vector<std::string>, std::less<>> sources_;
  std::vector<std::string> languages_;
};

/// Strips a duplicate-translation suffix (`MAT1:1#2` -> `MAT1:1`).
std::string_view base_verse_id(std::string_view verse_id);
bool is_duplicate_verse_id(std::string_view verse_id);

/// Reads every `<lang>[-<translation>].txt` file in `directory`. Each line is
/// `verse-id<TAB>text`; blank lines are skipped. Within a language the file
/// without a translation tag comes first, then tagged files by tag.
VerseCorpus load_corpus(const std::filesystem::path& directory);

/// Train / held-out partition by verse id. Held-out verses are removed from
/// training in every language and every translation.
struct SplitSpec {
  /// Held-out verse ids, most widely translated first.
  std::vector<std::string> held_out;
  /// Training verse ids per language, in corpus order.
  std::map<std::string, std::vector<std::string>> train;

  /// Builds the split for an explicit held-out list.
  static SplitSpec with_held_out(const VerseCorpus& corpus, std::vector<std::string> held_out);

  bool is_held_out(std::string_view verse_id) const;
  /// Held-out verse ids present in `language`, in `held_out` order.
  std::vector<std::string> held_out_for(const VerseCorpus& corpus, std::string_view language) const;

 private:
  std::set<std::string, std::less<>> held_out_set_;
};

/// Holds out the `holdout_size` verse ids present in the most languages (ties
/// by ascending id). Duplicate-translation ids are never held out themselves.
SplitSpec split_train_test(const VerseCorpus& corpus, std::size_t holdout_size);

}  // namespace langvec
