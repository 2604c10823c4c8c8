#include "langvec/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <iterator>
#include <sstream>

#include "langvec/format.hpp"

namespace langvec {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'M', 'L', 'L', 'M'};
constexpr std::uint64_t kMaxNameLength = 4096;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

template <typename U>
void put(std::ostream& out, U value) {
  char bytes[sizeof(U)];
  std::memcpy(bytes, &value, sizeof(U));
  out.write(bytes, sizeof(U));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::string_view take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw TruncatedError("checkpoint truncated while reading " + std::string(what) + " (offset " +
                           std::to_string(pos_) + ", need " + std::to_string(n) + " bytes, have " +
                           std::to_string(bytes_.size() - pos_) + ")");
    }
    std::string_view out(bytes_.data() + pos_, n);
    pos_ += n;
    return out;
  }

  template <typename U>
  U get(const char* what) {
    U value;
    std::memcpy(&value, take(sizeof(U), what).data(), sizeof(U));
    return value;
  }

  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

std::string metadata_text(const Checkpoint& c) {
  std::ostringstream out;
  out << "vocab_size=" << c.config.vocab_size << '\n'
      << "char_embed_dim=" << c.config.char_embed_dim << '\n'
      << "hidden_dim=" << c.config.hidden_dim << '\n'
      << "lang_embed_dim=" << c.config.lang_embed_dim << '\n'
      << "num_languages=" << c.config.num_languages << '\n'
      << "pre_softmax_dim=" << c.config.pre_softmax_dim << '\n'
      << "tie_language_embeddings=" << (c.config.tie_language_embeddings ? "true" : "false") << '\n'
      << "step=" << c.step << '\n'
      << "params=" << c.params.size() << '\n';
  out << "symbols=";
  for (std::size_t i = 0; i < c.vocab.symbols().size(); ++i) {
    if (i) out << ' ';
    out << std::hex << static_cast<std::uint32_t>(c.vocab.symbols()[i]) << std::dec;
  }
  out << '\n';
  for (const auto& lang : c.languages) out << "language=" << lang << '\n';
  for (const auto& m : c.history) {
    out << "metric=" << m.step << ',' << format_number(m.train_nats_per_char) << ','
        << format_number(m.heldout_bits_per_char) << '\n';
  }
  return out.str();
}

template <typename U>
U parse_value(std::string_view text, const std::string& key, int base = 10) {
  U value{};
  std::from_chars_result r;
  if constexpr (std::is_floating_point_v<U>) {
    if (text == "nan") return std::numeric_limits<U>::quiet_NaN();
    r = std::from_chars(text.data(), text.data() + text.size(), value);
  } else {
    r = std::from_chars(text.data(), text.data() + text.size(), value, base);
  }
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
    throw MalformedError("checkpoint metadata: bad value '" + std::string(text) + "' for " + key);
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto p = text.find(sep);
    out.push_back(text.substr(0, p));
    if (p == std::string_view::npos) return out;
    text.remove_prefix(p + 1);
  }
}

struct Metadata {
  Checkpoint ckpt;
  std::uint64_t num_params = 0;
};

Metadata parse_metadata(std::string_view text) {
  Metadata md;
  auto& c = md.ckpt;
  bool have_symbols = false;
  std::size_t have_fields = 0;
  std::vector<char32_t> symbols;
  for (std::string_view line : split(text, '\n')) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw MalformedError("checkpoint metadata: line without '=': " + std::string(line));
    const std::string key(line.substr(0, eq));
    const std::string_view value = line.substr(eq + 1);
    auto size_field = [&](std::size_t& field) {
      field = parse_value<std::size_t>(value, key);
      ++have_fields;
    };
    if (key == "vocab_size") size_field(c.config.vocab_size);
    else if (key == "char_embed_dim") size_field(c.config.char_embed_dim);
    else if (key == "hidden_dim") size_field(c.config.hidden_dim);
    else if (key == "lang_embed_dim") size_field(c.config.lang_embed_dim);
    else if (key == "num_languages") size_field(c.config.num_languages);
    else if (key == "pre_softmax_dim") size_field(c.config.pre_softmax_dim);
    else if (key == "tie_language_embeddings") {
      if (value != "true" && value != "false") throw MalformedError("checkpoint metadata: bad boolean " + std::string(value));
      c.config.tie_language_embeddings = value == "true";
      ++have_fields;
    } else if (key == "step") {
      c.step = parse_value<std::uint64_t>(value, key);
    } else if (key == "params") {
      md.num_params = parse_value<std::uint64_t>(value, key);
    } else if (key == "symbols") {
      have_symbols = true;
      if (!value.empty()) {
        for (auto hex : split(value, ' ')) symbols.push_back(static_cast<char32_t>(parse_value<std::uint32_t>(hex, key, 16)));
      }
    } else if (key == "language") {
      c.languages.emplace_back(value);
    } else if (key == "metric") {
      const auto parts = split(value, ',');
      if (parts.size() != 3) throw MalformedError("checkpoint metadata: bad metric record " + std::string(value));
      c.history.push_back({parse_value<std::uint64_t>(parts[0], key), parse_value<double>(parts[1], key),
                           parse_value<double>(parts[2], key)});
    } else {
      throw MalformedError("checkpoint metadata: unknown key " + key);
    }
  }
  if (have_fields != 7 || !have_symbols) throw MalformedError("checkpoint metadata: missing model configuration");
  try {
    c.vocab = Vocabulary(std::move(symbols));
    c.config.validate();
  } catch (const Error& e) {
    throw MalformedError(std::string("checkpoint metadata: ") + e.what());
  }
  if (c.vocab.size() != c.config.vocab_size) throw MalformedError("checkpoint metadata: vocabulary size disagrees with vocab_size");
  if (c.languages.size() != c.config.num_languages) {
    throw MalformedError("checkpoint metadata: language table disagrees with num_languages");
  }
  return md;
}

}  // namespace

std::size_t Checkpoint::language_index(std::string_view code) const {
  for (std::size_t i = 0; i < languages.size(); ++i) {
    if (languages[i] == code) return i;
  }
  std::string known;
  for (const auto& l : languages) known += (known.empty() ? "" : ", ") + l;
  throw LookupError("unknown language '" + std::string(code) + "'; known languages: " + known);
}

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  const std::string meta = metadata_text(ckpt);
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const ParamId id{i};
    const auto& name = ckpt.params.name(id);
    const auto& value = ckpt.params.value(id);
    put<std::uint64_t>(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, value.rank());
    for (std::size_t d : value.shape()) put<std::uint64_t>(out, d);
    for (float v : value.values()) put<float>(out, v);
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r{std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>())};
  if (r.take(std::min<std::size_t>(4, r.remaining()), "magic") != std::string_view(kMagic, 4)) {
    throw BadMagicError("not a checkpoint: missing MLLM magic");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint format version " + std::to_string(version) + " is not supported (expected version " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  const auto meta_len = r.get<std::uint64_t>("metadata length");
  Metadata md = parse_metadata(r.take(meta_len, "metadata"));
  Checkpoint& c = md.ckpt;
  for (std::uint64_t p = 0; p < md.num_params; ++p) {
    const auto name_len = r.get<std::uint64_t>("parameter name length");
    if (name_len == 0 || name_len > kMaxNameLength) throw MalformedError("checkpoint: bad parameter name length");
    std::string name(r.take(name_len, "parameter name"));
    const auto rank = r.get<std::uint64_t>("parameter rank");
    if (rank > Shape::kMaxRank) throw MalformedError("checkpoint: parameter " + name + " has rank " + std::to_string(rank));
    std::vector<std::size_t> dims;
    std::uint64_t count = 1;
    for (std::uint64_t d = 0; d < rank; ++d) {
      dims.push_back(r.get<std::uint64_t>("parameter dims"));
      if (dims.back() == 0 || dims.back() > kMaxElements) throw MalformedError("checkpoint: bad dimension in " + name);
      count *= dims.back();
      if (count > kMaxElements) throw MalformedError("checkpoint: parameter " + name + " is too large");
    }
    const auto raw = r.take(count * sizeof(float), "parameter data");
    std::vector<float> values(count);
    std::memcpy(values.data(), raw.data(), raw.size());
    try {
      c.params.add(std::move(name), Tensor<float>(Shape(std::span<const std::size_t>(dims)), std::move(values)));
    } catch (const ContractError& e) {
      throw MalformedError(std::string("checkpoint: ") + e.what());
    }
  }
  if (!r.at_end()) throw MalformedError("checkpoint: trailing bytes after the last parameter");
  try {
    Model<float> check(c.config, c.params);
  } catch (const Error& e) {
    throw MalformedError(std::string("checkpoint: ") + e.what());
  }
  return std::move(md.ckpt);
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  write_checkpoint(ckpt, out);
  out.flush();
  if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace langvec
