#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "langvec/param_store.hpp"
#include "langvec/tensor.hpp"

namespace langvec {

/// Handle of a value recorded on a Tape.
struct Var {
  std::uint32_t id = 0;
};

/// Reverse-mode differentiation by explicit recording.
///
/// Every operation appends one record holding its result and whatever it
/// needs for the backward pass. `backward` walks the records in exact reverse
/// order. Values bound with `param` route their gradient straight into the
/// owning ParamStore accumulator; `constant` and `frozen` values never receive
/// gradient, which is how a subset of parameters is held fixed.
///
/// A tape keeps its record storage across `clear()` so a training loop that
/// records similarly shaped graphs reaches a steady state without allocation.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Drops all records. Param bindings are dropped too.
  void clear();
  std::size_t size() const { return count_; }

  Var constant(const Tensor<T>& value);
  /// Binds a trainable parameter; gradients accumulate into `store.grad(id)`.
  /// The store must outlive the records.
  Var param(ParamStore<T>& store, ParamId id);
  /// Binds a parameter read-only: no gradient is produced for it.
  Var frozen(const ParamStore<T>& store, ParamId id);
  /// Binds an external tensor read-only. The tensor must outlive the records.
  Var frozen(const Tensor<T>& value);

  const Tensor<T>& value(Var v) const;
  /// Gradient of the last backward pass for a recorded value (zeros if the
  /// value was not reached).
  Tensor<T> grad(Var v) const;

  /// Accumulates d(loss)/d(param) * seed into every bound parameter's
  /// accumulator. Intermediate gradients are reset at the start of each call,
  /// so repeated calls accumulate into parameters only.
  void backward(Var loss, T seed = T{1});

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh(Var a);
  /// Concatenation along the last axis.
  Var concat(Var a, Var b);
  /// `length` entries starting at `begin` along the last axis.
  Var slice(Var a, std::size_t begin, std::size_t length);
  /// Normalizes over the last axis; `bias` may be omitted (zero).
  Var layer_norm(Var x, Var gain, std::optional<Var> bias = std::nullopt);
  Var embedding(Var table, std::size_t index);
  /// Scalar -log softmax(logits)[target], in nats.
  Var softmax_xent(Var logits, std::size_t target);
  Var sum(Var a);
  Var scale(Var a, T factor);

 private:
  enum class Op : std::uint8_t {
    kLeaf,
    kMatMul,
    kAdd,
    kMul,
    kSigmoid,
    kTanh,
    kConcat,
    kSlice,
    kLayerNorm,
    kEmbedding,
    kSoftmaxXent,
    kSum,
    kScale,
  };
  static constexpr std::uint32_t kNone = UINT32_MAX;

  struct Record {
    Op op = Op::kLeaf;
    std::uint32_t in0 = kNone;
    std::uint32_t in1 = kNone;
    std::uint32_t in2 = kNone;
    std::size_t index = 0;
    T factor{};
    bool requires_grad = false;
    bool grad_live = false;
    const Tensor<T>* ref = nullptr;
    Tensor<T>* ref_grad = nullptr;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> saved;
    Tensor<T> saved_aux;
  };

  Record& push(Op op, const Shape& shape, std::initializer_list<std::uint32_t> inputs);
  const Tensor<T>& val(std::uint32_t id) const;
  bool needs(std::uint32_t id) const { return id != kNone && records_[id].requires_grad; }
  /// Accumulator for a record's gradient, zero-initialized on first use.
  Tensor<T>& grad_slot(std::uint32_t id);
  void backprop(std::uint32_t id);

  std::vector<Record> records_;
  std::size_t count_ = 0;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace langvec
