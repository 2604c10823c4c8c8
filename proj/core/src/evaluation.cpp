#include "langvec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "langvec/format.hpp"

namespace langvec {

template <typename T>
LanguageScore score_sequences(const Model<T>& model, const LanguageVector<T>& lang, std::span<const TokenSequence> seqs,
                              std::string language, EvalPath path) {
  LanguageScore s;
  s.language = std::move(language);
  if (path == EvalPath::kBatched) {
    for (const auto& r : model.batch_nll(seqs, lang)) {
      s.total_nats += r.nats;
      s.chars += r.predictions;
    }
  } else {
    for (const auto& seq : seqs) {
      const auto r = model.sequence_nll(seq, lang);
      s.total_nats += r.nats;
      s.chars += r.predictions;
    }
  }
  if (s.chars == 0) throw ConfigError("no characters to score for language '" + s.language + "'");
  s.nats_per_char = s.total_nats / static_cast<double>(s.chars);
  s.bits_per_char = s.nats_per_char / std::numbers::ln2;
  return s;
}

template LanguageScore score_sequences(const Model<float>&, const LanguageVector<float>&, std::span<const TokenSequence>,
                                       std::string, EvalPath);
template LanguageScore score_sequences(const Model<double>&, const LanguageVector<double>&,
                                       std::span<const TokenSequence>, std::string, EvalPath);

const LanguageScore& EvalReport::at(std::string_view language) const {
  for (const auto& s : languages) {
    if (s.language == language) return s;
  }
  throw LookupError("language '" + std::string(language) + "' is not in the report");
}

std::vector<TokenSequence> heldout_sequences(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab,
                                             std::string_view language, std::size_t language_id,
                                             std::size_t max_length) {
  std::vector<TokenSequence> out;
  const auto& verses = corpus.verses(language);
  for (const auto& id : split.held_out_for(corpus, language)) {
    for (auto& seq : vocab.encode_sequences(language_id, verses.at(id), max_length)) out.push_back(std::move(seq));
  }
  return out;
}

EvalReport make_report(std::vector<LanguageScore> scores) {
  EvalReport r;
  r.languages = std::move(scores);
  for (const auto& s : r.languages) {
    r.mean_nats_per_char += s.nats_per_char;
    r.mean_bits_per_char += s.bits_per_char;
  }
  if (!r.languages.empty()) {
    r.mean_nats_per_char /= static_cast<double>(r.languages.size());
    r.mean_bits_per_char /= static_cast<double>(r.languages.size());
  }
  return r;
}

EvalReport evaluate(const Checkpoint& ckpt, const VerseCorpus& corpus, const SplitSpec& split,
                    const std::vector<std::string>& languages, EvalPath path) {
  const std::vector<std::string>& wanted = languages.empty() ? ckpt.languages : languages;
  std::vector<std::size_t> ids;
  for (const auto& code : wanted) ids.push_back(ckpt.language_index(code));
  const Model<float> model = ckpt.model<float>();
  std::vector<LanguageScore> scores;
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    const auto seqs = heldout_sequences(corpus, split, ckpt.vocab, wanted[i], ids[i]);
    if (seqs.empty()) throw ConfigError("language '" + wanted[i] + "' has no held-out verses");
    scores.push_back(score_sequences(model, model.language_vector(ids[i]), seqs, wanted[i], path));
  }
  return make_report(std::move(scores));
}

std::string report_csv(const EvalReport& report) {
  std::string out = "language,heldout_chars,bits_per_char,nats_per_char\n";
  std::size_t chars = 0;
  for (const auto& s : report.languages) {
    chars += s.chars;
    out += s.language + ',' + std::to_string(s.chars) + ',' + format_number(s.bits_per_char) + ',' +
           format_number(s.nats_per_char) + '\n';
  }
  out += "mean," + std::to_string(chars) + ',' + format_number(report.mean_bits_per_char) + ',' +
         format_number(report.mean_nats_per_char) + '\n';
  return out;
}

void CapacityPlan::validate() const {
  if (schedule.empty()) throw ConfigError("capacity schedule is empty");
  std::vector<std::string> sorted = languages;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("capacity language list has duplicates");
  }
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] == 0) throw ConfigError("capacity schedule entries must be at least 1");
    if (i > 0 && schedule[i] <= schedule[i - 1]) throw ConfigError("capacity schedule must be strictly increasing");
  }
  if (schedule.back() > languages.size()) {
    throw ConfigError("capacity schedule asks for " + std::to_string(schedule.back()) + " languages but only " +
                      std::to_string(languages.size()) + " are listed");
  }
  for (const auto& t : tracked) {
    if (std::find(languages.begin(), languages.end(), t) == languages.end()) {
      throw ConfigError("tracked language '" + t + "' is not in the capacity language list");
    }
  }
  train.validate();
}

std::vector<std::string> CapacityPlan::resolved_order() const {
  std::vector<std::string> order = languages;
  if (this->order == OrderMode::kRandom) {
    std::mt19937_64 rng(seed);
    // Fisher-Yates with an explicit draw so the order does not depend on the
    // standard library's shuffle.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(order[i - 1], order[j]);
    }
  }
  return order;
}

std::uint64_t run_seed(std::uint64_t master_seed, std::uint64_t num_languages) {
  // splitmix64 of the pair
  std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (num_languages + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void capacity_experiment(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab,
                         const CapacityPlan& plan, const std::function<void(const CapacityRow&)>& sink) {
  plan.validate();
  for (const auto& l : plan.languages) {
    if (!corpus.has_language(l)) throw LookupError("capacity language '" + l + "' is not in the corpus");
  }
  const auto order = plan.resolved_order();
  for (std::size_t k : plan.schedule) {
    const std::vector<std::string> present(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    TrainConfig cfg = plan.train;
    cfg.seed = run_seed(plan.seed, k);
    const auto result = train(corpus.subset(present), split, vocab, cfg, plan.model);
    std::vector<std::string> report;
    for (const auto& l : present) {
      if (plan.tracked.empty() || std::find(plan.tracked.begin(), plan.tracked.end(), l) != plan.tracked.end()) {
        report.push_back(l);
      }
    }
    if (report.empty()) continue;
    const auto eval = evaluate(result.checkpoint, corpus, split, report);
    for (const auto& s : eval.languages) sink({k, s.language, s.bits_per_char});
  }
}

std::vector<CapacityRow> capacity_experiment(const VerseCorpus& corpus, const SplitSpec& split,
                                             const Vocabulary& vocab, const CapacityPlan& plan) {
  std::vector<CapacityRow> rows;
  capacity_experiment(corpus, split, vocab, plan, [&](const CapacityRow& r) { rows.push_back(r); });
  return rows;
}

std::string capacity_csv(const std::vector<CapacityRow>& rows) {
  std::string out = "num_languages,language,heldout_bits_per_char\n";
  for (const auto& r : rows) {
    out += std::to_string(r.num_languages) + ',' + r.language + ',' + format_number(r.heldout_bits_per_char) + '\n';
  }
  return out;
}

void ShrinkPlan::validate() const {
  if (hidden_sizes.empty()) throw ConfigError("shrink plan has no hidden sizes");
  for (std::size_t i = 0; i < hidden_sizes.size(); ++i) {
    if (hidden_sizes[i] == 0) throw ConfigError("hidden sizes must be at least 1");
    if (i > 0 && hidden_sizes[i] >= hidden_sizes[i - 1]) throw ConfigError("hidden sizes must be strictly decreasing");
  }
  train.validate();
}

std::vector<std::size_t> halving_schedule(std::size_t base, std::size_t count) {
  std::vector<std::size_t> out;
  for (std::size_t h = base; h >= 1 && out.size() < count; h /= 2) out.push_back(h);
  return out;
}

void shrink_experiment(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab,
                       const ShrinkPlan& plan, const std::function<void(const ShrinkRow&)>& sink) {
  plan.validate();
  if (!corpus.has_language(plan.language)) {
    throw LookupError("shrink language '" + plan.language + "' is not in the corpus");
  }
  const VerseCorpus mono = corpus.subset({plan.language});
  for (std::size_t h : plan.hidden_sizes) {
    ModelConfig mc = plan.model;
    mc.hidden_dim = h;
    mc.vocab_size = vocab.size();
    mc.num_languages = 1;
    const auto result = train(mono, split, vocab, plan.train, mc);
    const auto eval = evaluate(result.checkpoint, mono, split, {plan.language});
    sink({h, count_parameters(mc), count_lstm_parameters(mc), eval.languages.front().bits_per_char});
  }
}

std::vector<ShrinkRow> shrink_experiment(const VerseCorpus& corpus, const SplitSpec& split, const Vocabulary& vocab,
                                         const ShrinkPlan& plan) {
  std::vector<ShrinkRow> rows;
  shrink_experiment(corpus, split, vocab, plan, [&](const ShrinkRow& r) { rows.push_back(r); });
  return rows;
}

std::string shrink_csv(const std::vector<ShrinkRow>& rows) {
  std::string out = "hidden_size,total_params,lstm_params,heldout_bits_per_char\n";
  for (const auto& r : rows) {
    out += std::to_string(r.hidden_size) + ',' + std::to_string(r.total_params) + ',' + std::to_string(r.lstm_params) +
           ',' + format_number(r.heldout_bits_per_char) + '\n';
  }
  return out;
}

}  // namespace langvec
