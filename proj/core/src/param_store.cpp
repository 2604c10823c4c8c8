#include "langvec/param_store.hpp"

#include <cmath>

namespace langvec {

template <typename T>
ParamId ParamStore<T>::add(std::string name, Tensor<T> init) {
  if (index_.contains(name)) throw ContractError("parameter '" + name + "' registered twice");
  const ParamId id{values_.size()};
  index_.emplace(name, id.index);
  names_.push_back(std::move(name));
  grads_.emplace_back(init.shape());
  values_.push_back(std::move(init));
  return id;
}

template <typename T>
bool ParamStore<T>::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

template <typename T>
ParamId ParamStore<T>::id(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw LookupError("unknown parameter '" + std::string(name) + "'");
  return ParamId{it->second};
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& g : grads_) g.fill(T{0});
}

template <typename T>
std::size_t ParamStore<T>::num_elements() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

template <typename T>
double ParamStore<T>::grad_norm() const {
  double s = 0.0;
  for (const auto& g : grads_) {
    for (T v : g.values()) s += static_cast<double>(v) * static_cast<double>(v);
  }
  return std::sqrt(s);
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace langvec
