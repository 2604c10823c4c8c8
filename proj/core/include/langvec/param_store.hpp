#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "langvec/tensor.hpp"

namespace langvec {

/// Stable handle of a parameter inside its ParamStore.
struct ParamId {
  std::size_t index = 0;
  friend bool operator==(ParamId, ParamId) = default;
};

/// Named trainable tensors, each paired with a gradient accumulator of the
/// same shape. Registration order is preserved and defines iteration order.
template <typename T>
class ParamStore {
 public:
  /// Throws ContractError if `name` is already registered.
  ParamId add(std::string name, Tensor<T> init);

  std::size_t size() const { return values_.size(); }
  bool contains(std::string_view name) const;
  /// Throws LookupError for unknown names.
  ParamId id(std::string_view name) const;
  const std::string& name(ParamId id) const { return names_[id.index]; }

  Tensor<T>& value(ParamId id) { return values_[id.index]; }
  const Tensor<T>& value(ParamId id) const { return values_[id.index]; }
  Tensor<T>& grad(ParamId id) { return grads_[id.index]; }
  const Tensor<T>& grad(ParamId id) const { return grads_[id.index]; }

  void zero_grad();
  std::size_t num_elements() const;
  double grad_norm() const;

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], values_[i].template cast<U>());
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<T>> values_;
  std::vector<Tensor<T>> grads_;
  std::unordered_map<std::string, std::size_t> index_;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace langvec
