#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "langvec/error.hpp"
#include "langvec/model.hpp"
#include "langvec/vocabulary.hpp"

namespace langvec {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Raised while reading a checkpoint.
class CheckpointError : public Error {
 public:
  using Error::Error;
};
class BadMagicError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class VersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class TruncatedError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class MalformedError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

/// One row of the training log. `train_nats_per_char` is NaN for the
/// evaluation before the first update.
struct MetricRecord {
  std::uint64_t step = 0;
  double train_nats_per_char = 0.0;
  double heldout_bits_per_char = 0.0;
};

/// Everything needed to rebuild and evaluate a trained model.
struct Checkpoint {
  ModelConfig config;
  Vocabulary vocab;
  /// Language id `i` is `languages[i]`.
  std::vector<std::string> languages;
  std::uint64_t step = 0;
  std::vector<MetricRecord> history;
  ParamStore<float> params;

  template <typename T = float>
  Model<T> model() const {
    return Model<T>(config, params.template cast<T>());
  }
  /// Throws LookupError listing the known codes.
  std::size_t language_index(std::string_view code) const;
};

/// Layout: `MLLM`, u32 version, u64 length + UTF-8 key=value metadata,
/// then per parameter u64 name length, name, u64 rank, u64 dims, f32 data.
/// All integers and floats little-endian.
void write_checkpoint(const Checkpoint& ckpt, std::ostream& out);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace langvec
