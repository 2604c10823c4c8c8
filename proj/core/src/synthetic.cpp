#include "langvec/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "langvec/error.hpp"
#include "langvec/utf8.hpp"

namespace langvec {

BigramLanguage BigramLanguage::from_logits(const Matrix& logits) {
  BigramLanguage out;
  for (std::size_t r = 0; r < kRows; ++r) {
    double top = logits[r][0];
    for (double z : logits[r]) top = std::max(top, z);
    double total = 0.0;
    for (std::size_t k = 0; k < kSymbols; ++k) total += out.probs_[r][k] = std::exp(logits[r][k] - top);
    for (auto& p : out.probs_[r]) p /= total;
  }
  return out;
}

BigramLanguage BigramLanguage::mixture(const BigramLanguage& a, const BigramLanguage& b, double weight_b) {
  BigramLanguage out;
  for (std::size_t r = 0; r < kRows; ++r) {
    for (std::size_t k = 0; k < kSymbols; ++k) {
      out.probs_[r][k] = (1.0 - weight_b) * a.probs_[r][k] + weight_b * b.probs_[r][k];
    }
  }
  return out;
}

char32_t BigramLanguage::symbol(std::size_t k) { return k + 1 == kSymbols ? U' ' : static_cast<char32_t>(U'a' + k); }

std::string BigramLanguage::sample(std::mt19937_64& rng, std::size_t length) const {
  std::u32string text;
  std::size_t row = 0;
  for (std::size_t i = 0; i < length; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    std::size_t k = 0;
    double acc = probs_[row][0];
    while (k + 1 < kSymbols && u >= acc) acc += probs_[row][++k];
    text.push_back(symbol(k));
    row = k + 1;
  }
  return utf8::encode(text);
}

namespace {

using Matrix = BigramLanguage::Matrix;

Matrix perturb(const Matrix& base, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, scale);
  Matrix out = base;
  for (auto& row : out) {
    for (auto& z : row) z += noise(rng);
  }
  return out;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

SyntheticFamily::SyntheticFamily(const SyntheticFamilyConfig& config) : config_(config) {
  if (config.min_length == 0 || config.max_length < config.min_length) throw ConfigError("bad synthetic sentence lengths");
  if (!(config.unseen_mix >= 0.0 && config.unseen_mix <= 1.0)) throw ConfigError("unseen_mix must lie in [0, 1]");
  if (config.latent_dim == 0) throw ConfigError("latent_dim must be positive");
  std::mt19937_64 rng(config.seed);
  const Matrix base = perturb(Matrix{}, config.root_scale, rng);
  std::vector<Matrix> basis;
  for (std::size_t j = 0; j < config.latent_dim; ++j) basis.push_back(perturb(Matrix{}, 1.0 / std::sqrt(config.latent_dim), rng));

  using Latent = std::vector<double>;
  auto step = [&](const Latent& z, double scale) {
    std::normal_distribution<double> noise(0.0, scale);
    Latent out = z;
    for (auto& x : out) x += noise(rng);
    return out;
  };
  std::vector<Latent> level{Latent(config.latent_dim, 0.0)};
  for (double scale : config.edge_scale) {
    std::vector<Latent> next;
    for (const auto& z : level) {
      next.push_back(step(z, scale));
      next.push_back(step(z, scale));
    }
    level = std::move(next);
  }
  Latent unseen(config.latent_dim);
  for (std::size_t j = 0; j < unseen.size(); ++j) unseen[j] = (1.0 - config.unseen_mix) * level[0][j] + config.unseen_mix * level[2][j];
  unseen = step(unseen, config.unseen_scale);

  auto logits = [&](const Latent& z) {
    Matrix m = base;
    for (std::size_t j = 0; j < z.size(); ++j) {
      for (std::size_t r = 0; r < m.size(); ++r) {
        for (std::size_t k = 0; k < m[r].size(); ++k) m[r][k] += z[j] * basis[j][r][k];
      }
    }
    return m;
  };
  for (std::size_t i = 0; i < level.size(); ++i) {
    codes_.push_back(std::string("sy") + static_cast<char>('a' + i));
    leaves_.push_back(BigramLanguage::from_logits(logits(level[i])));
  }
  unseen_code_ = "syx";
  leaves_.push_back(BigramLanguage::from_logits(logits(unseen)));
}

std::string SyntheticFamily::newick() const {
  const auto& c = codes_;
  return "(((" + c[0] + "," + c[1] + "),(" + c[2] + "," + c[3] + ")),((" + c[4] + "," + c[5] + "),(" + c[6] + "," +
         c[7] + ")));";
}

const BigramLanguage& SyntheticFamily::language(const std::string& code) const {
  if (code == unseen_code_) return leaves_.back();
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    if (codes_[i] == code) return leaves_[i];
  }
  throw LookupError("unknown synthetic language '" + code + "'");
}

VerseCorpus SyntheticFamily::corpus() const {
  VerseCorpus c;
  for (std::size_t l = 0; l < codes_.size(); ++l) {
    c.add_source(codes_[l], "synthetic");
    const auto texts = sentences(leaves_[l], config_.verses, l);
    for (std::size_t v = 0; v < texts.size(); ++v) {
      char id[16];
      std::snprintf(id, sizeof(id), "v%05zu", v);
      c.add_verse(codes_[l], id, texts[v]);
    }
  }
  return c;
}

std::vector<std::string> SyntheticFamily::sentences(const std::string& code, std::size_t count,
                                                    std::uint64_t stream) const {
  return sentences(language(code), count, stream);
}

std::vector<std::string> SyntheticFamily::sentences(const BigramLanguage& language, std::size_t count,
                                                    std::uint64_t stream) const {
  std::mt19937_64 rng(mix(config_.seed, stream));
  std::uniform_int_distribution<std::size_t> length(config_.min_length, config_.max_length);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(language.sample(rng, length(rng)));
  return out;
}

}  // namespace langvec
