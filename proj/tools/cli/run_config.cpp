#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace langvec::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool valid_key_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; }

UsageError bad_value(const std::string& key, const std::string& value, const char* expected) {
  return UsageError("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = {
      // paths and data
      "corpus", "out", "model", "test", "text", "holdout", "vocab_cap",
      // model
      "char_embed_dim", "hidden_dim", "lang_embed_dim", "pre_softmax_dim", "tie_language_embeddings",
      // training
      "steps", "batch_size", "eval_every", "patience", "seed", "learning_rate", "clip_norm", "precision",
      "max_length",
      // analysis
      "language", "languages", "from", "to", "alpha", "grid", "temperature", "length", "count", "format", "metric",
      "linkage", "init", "estimate_steps", "estimate_learning_rate", "sentence_budget",
      // experiments
      "schedule", "order", "tracked", "hidden_sizes"};
  return keys;
}

bool RunConfig::is_known(std::string_view key) {
  const auto& keys = known_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

RunConfig RunConfig::parse(std::string_view text, const std::string& origin) {
  RunConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw UsageError(where + "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty() || !std::all_of(key.begin(), key.end(), valid_key_char)) {
      throw UsageError(where + "bad key '" + key + "'");
    }
    if (!is_known(key)) throw UsageError(where + "unknown key '" + key + "'");
    config.values_[key] = std::string(trim(line.substr(eq + 1)));
  }
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void RunConfig::set(const std::string& key, std::string value) {
  if (!is_known(key)) throw UsageError("unknown config key '" + key + "'");
  values_[key] = std::move(value);
}

void RunConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw UsageError("--set expects key=value, got '" + std::string(assignment) + "'");
  set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
}

void RunConfig::merge(const RunConfig& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::optional<std::string> RunConfig::find(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

const std::string& RunConfig::require(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) throw UsageError("missing required setting '" + key + "'");
  return it->second;
}

std::string RunConfig::text(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

std::uint64_t RunConfig::u64(const std::string& key, std::uint64_t fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto* end = v->data() + v->size();
  auto [p, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc{} || p != end || v->empty()) throw bad_value(key, *v, "a non-negative integer");
  return out;
}

std::size_t RunConfig::size(const std::string& key, std::size_t fallback) const {
  return static_cast<std::size_t>(u64(key, fallback));
}

double RunConfig::real(const std::string& key, double fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  double out = 0.0;
  const auto* end = v->data() + v->size();
  auto [p, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc{} || p != end || v->empty() || !std::isfinite(out)) throw bad_value(key, *v, "a finite number");
  return out;
}

bool RunConfig::flag(const std::string& key, bool fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw bad_value(key, *v, "true or false");
}

std::vector<std::string> RunConfig::list(const std::string& key) const {
  std::vector<std::string> out;
  auto v = find(key);
  if (!v) return out;
  std::string_view rest = *v;
  while (true) {
    const auto comma = rest.find(',');
    auto item = trim(rest.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

std::vector<std::size_t> RunConfig::sizes(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& item : list(key)) {
    std::size_t n = 0;
    const auto* end = item.data() + item.size();
    auto [p, ec] = std::from_chars(item.data(), end, n);
    if (ec != std::errc{} || p != end) throw bad_value(key, item, "a comma separated list of integers");
    out.push_back(n);
  }
  return out;
}

std::string format_config(const std::map<std::string, std::string>& values) {
  std::string out;
  for (const auto& [k, v] : values) out += k + " = " + v + "\n";
  return out;
}

}  // namespace langvec::cli
