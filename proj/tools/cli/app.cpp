#include "app.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "langvec/checkpoint.hpp"
#include "langvec/corpus.hpp"
#include "langvec/dendrogram.hpp"
#include "langvec/error.hpp"
#include "langvec/evaluation.hpp"
#include "langvec/format.hpp"
#include "langvec/langspace.hpp"
#include "langvec/training.hpp"
#include "langvec/vocabulary.hpp"
#include "run_config.hpp"

namespace langvec::cli {

namespace fs = std::filesystem;

namespace {

/// Unreadable inputs and unwritable outputs (exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d = {
      {"holdout", "128"},
      {"vocab_cap", "1000"},
      {"char_embed_dim", "16"},
      {"hidden_dim", "64"},
      {"lang_embed_dim", "8"},
      {"pre_softmax_dim", "0"},
      {"tie_language_embeddings", "false"},
      {"steps", "1000"},
      {"batch_size", "16"},
      {"eval_every", "100"},
      {"patience", "0"},
      {"learning_rate", "0.001"},
      {"clip_norm", "5.0"},
      {"precision", "float32"},
      {"max_length", "512"},
      {"alpha", "0.5"},
      {"grid", "0:1:0.01"},
      {"temperature", "1.0"},
      {"length", "512"},
      {"count", "1"},
      {"format", "newick"},
      {"metric", "cosine"},
      {"linkage", "average"},
      {"estimate_steps", "200"},
      {"estimate_learning_rate", "0.1"},
      {"sentence_budget", "32"},
      {"order", "given"},
  };
  return d;
}

const std::map<std::string, std::string>& help_text() {
  static const std::map<std::string, std::string> h = {
      {"corpus", "directory of <lang>[-<tag>].txt files with verse-id<TAB>text lines"},
      {"out", "output path, '-' for stdout"},
      {"model", "checkpoint file"},
      {"test", "plain text file, one sentence per line"},
      {"text", "plain text file, one sentence per line"},
      {"holdout", "number of held-out verse ids"},
      {"vocab_cap", "vocabulary size cap, reserved ids included"},
      {"char_embed_dim", "character embedding width"},
      {"hidden_dim", "LSTM width"},
      {"lang_embed_dim", "language vector width per segment"},
      {"pre_softmax_dim", "width of the tanh layer before the softmax, 0 for hidden_dim"},
      {"tie_language_embeddings", "share one language vector across the three injection points"},
      {"steps", "training steps"},
      {"batch_size", "sequences per step"},
      {"eval_every", "steps between held-out evaluations"},
      {"patience", "evaluations without improvement before stopping, 0 disables"},
      {"seed", "random seed"},
      {"learning_rate", "Adam learning rate"},
      {"clip_norm", "global gradient norm cap, 0 disables"},
      {"precision", "float32 or float64"},
      {"max_length", "longest training sequence in ids"},
      {"language", "language code"},
      {"languages", "comma separated language codes"},
      {"from", "language at alpha 0"},
      {"to", "language at alpha 1"},
      {"alpha", "interpolation weight of --to"},
      {"grid", "alpha grid start:end:step"},
      {"temperature", "softmax temperature, 0 for greedy"},
      {"length", "maximum generated symbols"},
      {"count", "number of samples"},
      {"format", "newick or json"},
      {"metric", "cosine or euclidean"},
      {"linkage", "average, complete or single"},
      {"init", "language whose vector starts the search"},
      {"estimate_steps", "optimization steps"},
      {"estimate_learning_rate", "Adam learning rate on the vector"},
      {"sentence_budget", "sentences used at most"},
      {"schedule", "comma separated language counts, e.g. 1,2,4,8"},
      {"order", "given or random"},
      {"tracked", "comma separated languages to report, all when empty"},
      {"hidden_sizes", "comma separated hidden sizes"},
  };
  return h;
}

const std::vector<std::string> kModelKeys = {"char_embed_dim", "hidden_dim", "lang_embed_dim", "pre_softmax_dim",
                                             "tie_language_embeddings"};
const std::vector<std::string> kTrainKeys = {"steps",         "batch_size", "eval_every", "patience",
                                             "learning_rate", "clip_norm",  "precision",  "max_length"};

std::vector<std::string> join(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

struct Command {
  std::string name;
  std::string description;
  std::vector<std::string> keys;
  std::vector<std::string> required;
  std::function<void(const RunConfig&, std::ostream&, std::ostream&)> action;

  CLI::App* app = nullptr;
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> options;
  std::string config_file;
  std::vector<std::string> assignments;
};

std::string flag_name(const std::string& key) {
  std::string out = "--" + key;
  for (auto& c : out) {
    if (c == '_') c = '-';
  }
  return out;
}

// ---- io ----

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> read_sentences(const fs::path& path) {
  std::vector<std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) out.push_back(line);
  }
  if (out.empty()) throw DataError(path.string() + " holds no sentences");
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << content;
  if (!f) throw DataError("cannot write " + path.string());
}

std::string effective_config(const Command& cmd, const RunConfig& config) {
  std::map<std::string, std::string> values;
  for (const auto& key : cmd.keys) {
    if (auto v = config.find(key)) {
      values[key] = *v;
    } else if (auto it = defaults().find(key); it != defaults().end()) {
      values[key] = it->second;
    }
  }
  return "# langvec " + cmd.name + "\n" + format_config(values);
}

/// Writes a file result, or prints it for `--out -`, and echoes the config
/// next to the file.
void emit(const Command& cmd, const RunConfig& config, const std::string& content, std::ostream& out) {
  const auto& target = config.require("out");
  if (target == "-") {
    out << content;
    return;
  }
  const fs::path path(target);
  write_file(path, content);
  write_file(path.parent_path() / "effective-config.txt", effective_config(cmd, config));
}

fs::path prepare_directory(const Command& cmd, const RunConfig& config) {
  const fs::path dir(config.require("out"));
  if (dir == "-") throw UsageError(cmd.name + " writes a directory; --out - is not supported");
  fs::create_directories(dir);
  write_file(dir / "effective-config.txt", effective_config(cmd, config));
  return dir;
}

// ---- config to library types ----

/// Library validation failures are usage errors at this level.
template <typename F>
auto checked(F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

ModelConfig model_config(const RunConfig& c) {
  ModelConfig m;
  m.char_embed_dim = c.size("char_embed_dim", m.char_embed_dim);
  m.hidden_dim = c.size("hidden_dim", m.hidden_dim);
  m.lang_embed_dim = c.size("lang_embed_dim", m.lang_embed_dim);
  m.pre_softmax_dim = c.size("pre_softmax_dim", m.pre_softmax_dim);
  m.tie_language_embeddings = c.flag("tie_language_embeddings", m.tie_language_embeddings);
  return m;
}

TrainConfig train_config(const RunConfig& c, std::ostream& log) {
  TrainConfig t;
  t.steps = c.size("steps", t.steps);
  t.batch_size = c.size("batch_size", t.batch_size);
  t.eval_every = c.size("eval_every", t.eval_every);
  t.patience = c.size("patience", t.patience);
  t.seed = c.u64("seed", t.seed);
  t.learning_rate = c.real("learning_rate", t.learning_rate);
  t.clip_norm = c.real("clip_norm", t.clip_norm);
  t.max_length = c.size("max_length", t.max_length);
  const auto precision = c.text("precision", "float32");
  if (precision == "float32") {
    t.precision = Precision::kFloat32;
  } else if (precision == "float64") {
    t.precision = Precision::kFloat64;
  } else {
    throw UsageError("precision must be float32 or float64, got '" + precision + "'");
  }
  t.on_eval = [&log](const MetricRecord& m) {
    log << "step " << m.step << " train_nats_per_char " << format_number(m.train_nats_per_char)
        << " heldout_bits_per_char " << format_number(m.heldout_bits_per_char) << std::endl;
  };
  checked([&] { t.validate(); });
  return t;
}

struct Data {
  VerseCorpus corpus;
  SplitSpec split;
};

Data load_data(const RunConfig& c) {
  Data d;
  d.corpus = load_corpus(c.require("corpus"));
  if (d.corpus.num_languages() == 0) throw DataError("no language files in " + c.require("corpus"));
  d.split = split_train_test(d.corpus, c.size("holdout", 128));
  return d;
}

std::vector<std::string> all_languages(const RunConfig& c, const VerseCorpus& corpus) {
  auto langs = c.list("languages");
  return langs.empty() ? corpus.languages() : langs;
}

std::string vector_text(const std::vector<float>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_number(v[i]);
  }
  return out;
}

// ---- subcommands ----

void do_train(const Command& cmd, const RunConfig& c, std::ostream&, std::ostream& log) {
  auto data = load_data(c);
  const auto vocab = build_vocabulary(data.corpus, c.size("vocab_cap", Vocabulary::kDefaultCap));
  const auto tc = train_config(c, log);
  const auto mc = model_config(c);
  const auto dir = prepare_directory(cmd, c);
  log << "training on " << data.corpus.num_languages() << " languages, vocabulary " << vocab.size() << std::endl;
  try {
    const auto result = train(data.corpus, data.split, vocab, tc, mc);
    save_checkpoint(result.checkpoint, dir / "model.ckpt");
    write_file(dir / "metrics.csv", metrics_csv(result.metrics));
    log << "best heldout_bits_per_char at step " << result.checkpoint.step << (result.stopped_early ? " (stopped early)" : "")
        << std::endl;
  } catch (const DivergenceError& e) {
    save_checkpoint(e.best(), dir / "model.ckpt");
    write_file(dir / "metrics.csv", metrics_csv(e.best().history));
    throw;
  }
}

void do_eval(const Command& cmd, const RunConfig& c, std::ostream& out, std::ostream&) {
  const auto ckpt = load_checkpoint(c.require("model"));
  const auto data = load_data(c);
  const auto report = evaluate(ckpt, data.corpus, data.split, c.list("languages"));
  emit(cmd, c, report_csv(report), out);
}

void do_sample(const Command& cmd, const RunConfig& c, std::ostream& out, std::ostream&) {
  const auto ckpt = load_checkpoint(c.require("model"));
  const auto model = ckpt.model<float>();
  auto lang = model.language_vector(ckpt.language_index(c.require("language")));
  if (auto to = c.find("to"); to && !to->empty()) {
    lang = interpolate(lang, model.language_vector(ckpt.language_index(*to)), c.real("alpha", 0.5));
  }
  SamplerConfig sc;
  sc.temperature = c.real("temperature", sc.temperature);
  sc.max_length = c.size("length", sc.max_length);
  checked([&] { sc.validate(); });
  const auto seed = c.u64("seed", 0);
  std::string text;
  for (std::size_t i = 0, n = c.size("count", 1); i < n; ++i) {
    sc.seed = seed + i;
    text += generate(ckpt, lang, sc) + "\n";
  }
  emit(cmd, c, text, out);
}

void do_interpolate(const Command& cmd, const RunConfig& c, std::ostream& out, std::ostream&) {
  const auto ckpt = load_checkpoint(c.require("model"));
  const auto grid = checked([&] { return parse_grid(c.text("grid", "0:1:0.01")); });
  const auto sentences = read_sentences(c.require("test"));
  const auto curve = interpolation_curve(ckpt, c.require("from"), c.require("to"), sentences, grid);
  emit(cmd, c, curve_csv(curve), out);
}

void do_cluster(const Command& cmd, const RunConfig& c, std::ostream& out, std::ostream&) {
  const auto ckpt = load_checkpoint(c.require("model"));
  const auto metric = checked([&] { return parse_metric(c.text("metric", "cosine")); });
  const auto linkage = checked([&] { return parse_linkage(c.text("linkage", "average")); });
  const auto tree = cluster_languages(ckpt, metric, linkage);
  const auto format = c.text("format", "newick");
  if (format == "newick") {
    emit(cmd, c, tree.to_newick() + "\n", out);
  } else if (format == "json") {
    emit(cmd, c, tree.to_json() + "\n", out);
  } else {
    throw UsageError("format must be newick or json, got '" + format + "'");
  }
}

void do_estimate(const Command& cmd, const RunConfig& c, std::ostream& out, std::ostream&) {
  const auto ckpt = load_checkpoint(c.require("model"));
  const auto sentences = read_sentences(c.require("text"));
  EstimationConfig ec;
  ec.init_language = c.require("init");
  ec.steps = c.size("estimate_steps", ec.steps);
  ec.learning_rate = c.real("estimate_learning_rate", ec.learning_rate);
  ec.sentence_budget = c.size("sentence_budget", ec.sentence_budget);
  checked([&] { ec.validate(); });
  const auto r = estimate_vector(ckpt, sentences, ec);
  std::ostringstream s;
  s << "init = " << ec.init_language << "\n"
    << "before_bits_per_char = " << format_number(r.before_bits_per_char) << "\n"
    << "after_bits_per_char = " << format_number(r.after_bits_per_char) << "\n"
    << "optimization_sentences = " << r.optimization_sentences << "\n"
    << "holdout_sentences = " << r.holdout_sentences << "\n"
    << "accepted_steps = " << r.accepted_steps << "\n"
    << "vector = " << vector_text(r.vector.full()) << "\n";
  emit(cmd, c, s.str(), out);
}

void do_capacity(const Command& cmd, const RunConfig& c, std::ostream&, std::ostream& log) {
  const auto data = load_data(c);
  const auto vocab = build_vocabulary(data.corpus, c.size("vocab_cap", Vocabulary::kDefaultCap));
  CapacityPlan plan;
  plan.languages = all_languages(c, data.corpus);
  plan.schedule = c.sizes("schedule");
  const auto order = c.text("order", "given");
  if (order == "given") {
    plan.order = OrderMode::kGiven;
  } else if (order == "random") {
    plan.order = OrderMode::kRandom;
  } else {
    throw UsageError("order must be given or random, got '" + order + "'");
  }
  plan.seed = c.u64("seed", 0);
  plan.tracked = c.list("tracked");
  plan.train = train_config(c, log);
  plan.model = model_config(c);
  checked([&] { plan.validate(); });
  const auto dir = prepare_directory(cmd, c);
  std::vector<CapacityRow> rows;
  // rewritten after every run so a failure keeps what finished
  capacity_experiment(data.corpus, data.split, vocab, plan, [&](const CapacityRow& row) {
    rows.push_back(row);
    write_file(dir / "capacity.csv", capacity_csv(rows));
  });
  write_file(dir / "capacity.csv", capacity_csv(rows));
}

void do_shrink(const Command& cmd, const RunConfig& c, std::ostream&, std::ostream& log) {
  const auto data = load_data(c);
  ShrinkPlan plan;
  plan.language = c.require("language");
  const auto sub = data.corpus.subset({plan.language});
  const auto vocab = build_vocabulary(sub, c.size("vocab_cap", Vocabulary::kDefaultCap));
  plan.hidden_sizes = c.sizes("hidden_sizes");
  plan.train = train_config(c, log);
  plan.model = model_config(c);
  checked([&] { plan.validate(); });
  const auto dir = prepare_directory(cmd, c);
  std::vector<ShrinkRow> rows;
  shrink_experiment(data.corpus, data.split, vocab, plan, [&](const ShrinkRow& row) {
    rows.push_back(row);
    write_file(dir / "shrink.csv", shrink_csv(rows));
  });
  write_file(dir / "shrink.csv", shrink_csv(rows));
}

std::vector<std::unique_ptr<Command>> make_commands() {
  std::vector<std::unique_ptr<Command>> cmds;
  auto add = [&](std::string name, std::string description, std::vector<std::string> keys,
                 std::vector<std::string> required,
                 void (*fn)(const Command&, const RunConfig&, std::ostream&, std::ostream&)) {
    auto cmd = std::make_unique<Command>();
    cmd->name = std::move(name);
    cmd->description = std::move(description);
    cmd->keys = std::move(keys);
    cmd->required = std::move(required);
    const Command* self = cmd.get();
    cmd->action = [self, fn](const RunConfig& c, std::ostream& out, std::ostream& log) { fn(*self, c, out, log); };
    cmds.push_back(std::move(cmd));
  };
  const auto data_keys = std::vector<std::string>{"corpus", "out", "seed", "holdout", "vocab_cap"};
  add("train", "Train a multilingual model; writes model.ckpt and metrics.csv into --out",
      join(join(data_keys, kModelKeys), kTrainKeys), {"corpus", "out", "seed"}, do_train);
  add("eval", "Held-out bits per character of each language", {"model", "corpus", "holdout", "languages", "out"},
      {"model", "corpus", "out"}, do_eval);
  add("sample", "Generate text from a language vector",
      {"model", "language", "to", "alpha", "temperature", "length", "count", "seed", "out"},
      {"model", "language", "seed", "out"}, do_sample);
  add("interpolate", "Cross-entropy of a text along the line between two language vectors",
      {"model", "from", "to", "grid", "test", "out"}, {"model", "from", "to", "test", "out"}, do_interpolate);
  add("cluster", "Hierarchical clustering of the language vectors", {"model", "format", "metric", "linkage", "out"},
      {"model", "out"}, do_cluster);
  add("estimate", "Fit a vector for new text with the model frozen",
      {"model", "text", "init", "estimate_steps", "estimate_learning_rate", "sentence_budget", "out"},
      {"model", "text", "init", "out"}, do_estimate);
  add("capacity", "Retrain on growing language sets; writes capacity.csv into --out",
      join(join(join(data_keys, {"languages", "schedule", "order", "tracked"}), kModelKeys), kTrainKeys),
      {"corpus", "out", "seed", "schedule"}, do_capacity);
  add("shrink", "Monolingual training at several hidden sizes; writes shrink.csv into --out",
      join(join(join(data_keys, {"language", "hidden_sizes"}), kModelKeys), kTrainKeys),
      {"corpus", "out", "seed", "language", "hidden_sizes"}, do_shrink);
  return cmds;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Character-level language model conditioned on language vectors", "langvec"};
  app.require_subcommand(1);
  auto cmds = make_commands();
  for (auto& cmd : cmds) {
    cmd->app = app.add_subcommand(cmd->name, cmd->description);
    cmd->app->add_option("--config", cmd->config_file, "key = value file; flags override it");
    cmd->app->add_option("--set", cmd->assignments, "key=value override, repeatable");
    for (const auto& key : cmd->keys) {
      std::string desc = help_text().at(key);
      if (auto it = defaults().find(key); it != defaults().end()) desc += " [" + it->second + "]";
      for (const auto& r : cmd->required) {
        if (r == key) desc += " (required)";
      }
      cmd->options[key] = cmd->app->add_option(flag_name(key), cmd->raw[key], desc);
    }
  }

  Command* chosen = nullptr;
  try {
    app.parse(argc, argv);
    for (auto& cmd : cmds) {
      if (cmd->app->parsed()) chosen = cmd.get();
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n";
    for (auto& cmd : cmds) {
      if (argc > 1 && cmd->name == argv[1]) {
        err << cmd->app->help();
        return kUsage;
      }
    }
    err << app.help();
    return kUsage;
  }

  try {
    RunConfig config;
    if (!chosen->config_file.empty()) config = RunConfig::load(chosen->config_file);
    for (const auto& a : chosen->assignments) config.set_assignment(a);
    for (const auto& [key, opt] : chosen->options) {
      if (opt->count() > 0) config.set(key, chosen->raw[key]);
    }
    for (const auto& key : chosen->required) config.require(key);
    chosen->action(config, out, err);
    return kOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << chosen->app->help();
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
}

}  // namespace langvec::cli
