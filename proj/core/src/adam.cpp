#include "langvec/adam.hpp"

#include <cmath>

namespace langvec {

template <typename T>
AdamState<T>::AdamState(const ParamStore<T>& params, AdamConfig config) : config_(config) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_.emplace_back(params.value(ParamId{i}).shape());
    v_.emplace_back(params.value(ParamId{i}).shape());
  }
}

template <typename T>
void AdamState<T>::apply(ParamStore<T>& params) {
  if (params.size() != m_.size()) throw ContractError("Adam state does not match the parameter store");
  for (std::size_t i = 0; i < params.size(); ++i) {
    params.grad(ParamId{i}).check_finite("gradient of '" + params.name(ParamId{i}) + "'");
  }
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamId id{i};
    T* p = params.value(id).data();
    T* g = params.grad(id).data();
    T* m = m_[i].data();
    T* v = v_[i].data();
    for (std::size_t k = 0; k < m_[i].size(); ++k) {
      const double grad = g[k];
      const double mk = b1 * m[k] + (1.0 - b1) * grad;
      const double vk = b2 * v[k] + (1.0 - b2) * grad * grad;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double m_hat = mk / correction1;
      const double v_hat = vk / correction2;
      p[k] = static_cast<T>(p[k] - config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon));
      g[k] = T{0};
    }
  }
}

template <typename T>
double clip_gradients(ParamStore<T>& params, double max_norm) {
  const double norm = params.grad_norm();
  if (max_norm > 0.0 && norm > max_norm) {
    const T factor = static_cast<T>(max_norm / norm);
    for (std::size_t i = 0; i < params.size(); ++i) {
      for (auto& g : params.grad(ParamId{i}).values()) g *= factor;
    }
  }
  return norm;
}

template class AdamState<float>;
template class AdamState<double>;
template double clip_gradients(ParamStore<float>&, double);
template double clip_gradients(ParamStore<double>&, double);

}  // namespace langvec
