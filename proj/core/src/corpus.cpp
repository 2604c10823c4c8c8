#include "langvec/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>
#include <unordered_map>

#include "langvec/error.hpp"
#include "langvec/utf8.hpp"

namespace langvec {

std::string VerseCorpus::add_verse(const std::string& language, const std::string& verse_id, std::string text) {
  if (language.empty()) throw ConfigError("empty language code");
  if (verse_id.empty()) throw ConfigError("empty verse id in language '" + language + "'");
  auto [it, inserted] = texts_.try_emplace(language);
  if (inserted) {
    languages_.insert(std::upper_bound(languages_.begin(), languages_.end(), language), language);
  }
  VerseMap& verses = it->second;
  std::string id = verse_id;
  for (int copy = 2; verses.contains(id); ++copy) id = verse_id + "#" + std::to_string(copy);
  verses.emplace(id, std::move(text));
  return id;
}

void VerseCorpus::add_source(const std::string& language, std::string source_name) {
  sources_[language].push_back(std::move(source_name));
}

bool VerseCorpus::has_language(std::string_view language) const {
  return texts_.find(language) != texts_.end();
}

const VerseCorpus::VerseMap& VerseCorpus::verses(std::string_view language) const {
  auto it = texts_.find(language);
  if (it == texts_.end()) throw LookupError("language '" + std::string(language) + "' not in corpus");
  return it->second;
}

const std::vector<std::string>& VerseCorpus::sources(std::string_view language) const {
  static const std::vector<std::string> kNone;
  auto it = sources_.find(language);
  return it == sources_.end() ? kNone : it->second;
}

std::size_t VerseCorpus::total_verses() const {
  std::size_t n = 0;
  for (const auto& [lang, verses] : texts_) n += verses.size();
  return n;
}

VerseCorpus VerseCorpus::subset(const std::vector<std::string>& languages) const {
  VerseCorpus out;
  for (const auto& lang : languages) {
    const VerseMap& v = verses(lang);
    if (out.has_language(lang)) continue;
    out.texts_.emplace(lang, v);
    out.languages_.insert(std::upper_bound(out.languages_.begin(), out.languages_.end(), lang), lang);
    if (auto it = sources_.find(lang); it != sources_.end()) out.sources_.emplace(lang, it->second);
  }
  return out;
}

std::string_view base_verse_id(std::string_view verse_id) {
  const auto hash = verse_id.rfind('#');
  if (hash == std::string_view::npos || hash == 0 || hash + 1 == verse_id.size()) return verse_id;
  const auto digits = verse_id.substr(hash + 1);
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) return verse_id;
  return verse_id.substr(0, hash);
}

bool is_duplicate_verse_id(std::string_view verse_id) {
  return base_verse_id(verse_id).size() != verse_id.size();
}

namespace {

struct SourceFile {
  std::string language;
  std::string translation;
  std::filesystem::path path;
};

}  // namespace

VerseCorpus load_corpus(const std::filesystem::path& directory) {
  std::error_code ec;
  if (!std::filesystem::is_directory(directory, ec)) {
    throw ConfigError("corpus directory '" + directory.string() + "' does not exist");
  }
  std::vector<SourceFile> files;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    const std::string stem = entry.path().stem().string();
    const auto dash = stem.find('-');
    SourceFile f{stem.substr(0, dash), dash == std::string::npos ? "" : stem.substr(dash + 1), entry.path()};
    if (f.language.empty()) throw ConfigError("corpus file '" + entry.path().string() + "' has no language code");
    files.push_back(std::move(f));
  }
  if (files.empty()) throw ConfigError("corpus directory '" + directory.string() + "' contains no .txt files");
  std::sort(files.begin(), files.end(), [](const SourceFile& a, const SourceFile& b) {
    return std::tie(a.language, a.translation) < std::tie(b.language, b.translation);
  });

  VerseCorpus corpus;
  for (const auto& f : files) {
    std::ifstream in(f.path, std::ios::binary);
    if (!in) throw ConfigError("cannot open corpus file '" + f.path.string() + "'");
    corpus.add_source(f.language, f.path.filename().string());
    std::string line;
    std::size_t line_no = 0;
    std::size_t stored = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const std::string where = f.path.filename().string() + ":" + std::to_string(line_no);
      const auto tab = line.find('\t');
      if (tab == std::string::npos) throw ParseError(where + ": expected 'verse-id<TAB>text'");
      if (tab == 0) throw ParseError(where + ": empty verse id");
      std::string text = line.substr(tab + 1);
      utf8::decode_or_throw(line, where);
      corpus.add_verse(f.language, line.substr(0, tab), std::move(text));
      ++stored;
    }
    if (stored == 0 && !corpus.has_language(f.language)) {
      throw ConfigError("corpus file '" + f.path.string() + "' contains no verses");
    }
  }
  return corpus;
}

SplitSpec SplitSpec::with_held_out(const VerseCorpus& corpus, std::vector<std::string> held_out) {
  SplitSpec split;
  split.held_out = std::move(held_out);
  split.held_out_set_.insert(split.held_out.begin(), split.held_out.end());
  for (const auto& lang : corpus.languages()) {
    auto& train = split.train[lang];
    for (const auto& [id, text] : corpus.verses(lang)) {
      if (!split.is_held_out(id)) train.push_back(id);
    }
  }
  return split;
}

bool SplitSpec::is_held_out(std::string_view verse_id) const {
  return held_out_set_.find(base_verse_id(verse_id)) != held_out_set_.end();
}

std::vector<std::string> SplitSpec::held_out_for(const VerseCorpus& corpus, std::string_view language) const {
  const auto& verses = corpus.verses(language);
  std::vector<std::string> out;
  for (const auto& id : held_out) {
    if (verses.contains(id)) out.push_back(id);
  }
  return out;
}

SplitSpec split_train_test(const VerseCorpus& corpus, std::size_t holdout_size) {
  if (holdout_size == 0) throw ConfigError("hold-out size must be at least 1");
  std::unordered_map<std::string, std::size_t> coverage;
  for (const auto& lang : corpus.languages()) {
    for (const auto& [id, text] : corpus.verses(lang)) {
      if (!is_duplicate_verse_id(id)) ++coverage[id];
    }
  }
  if (holdout_size >= coverage.size()) {
    throw ConfigError("hold-out size " + std::to_string(holdout_size) + " must be below the number of distinct verse ids (" +
                      std::to_string(coverage.size()) + ")");
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(coverage.begin(), coverage.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  std::vector<std::string> held_out;
  for (std::size_t i = 0; i < holdout_size; ++i) held_out.push_back(ranked[i].first);
  return SplitSpec::with_held_out(corpus, std::move(held_out));
}

}  // namespace langvec
