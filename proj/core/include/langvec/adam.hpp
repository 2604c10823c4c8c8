#pragma once

#include <cstdint>
#include <vector>

#include "langvec/param_store.hpp"

namespace langvec {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moments for every parameter of one store.
template <typename T>
class AdamState {
 public:
  AdamState(const ParamStore<T>& params, AdamConfig config = {});

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::uint64_t step() const { return step_; }
  const Tensor<T>& first_moment(ParamId id) const { return m_[id.index]; }
  const Tensor<T>& second_moment(ParamId id) const { return v_[id.index]; }

  /// One bias-corrected Adam update from the accumulated gradients, which are
  /// zeroed afterwards. Throws NumericError naming the first parameter whose
  /// gradient is not finite; nothing is modified in that case.
  void apply(ParamStore<T>& params);

 private:
  AdamConfig config_;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
  std::uint64_t step_ = 0;
};

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping. `max_norm <= 0` disables clipping.
template <typename T>
double clip_gradients(ParamStore<T>& params, double max_norm);

extern template class AdamState<float>;
extern template class AdamState<double>;

}  // namespace langvec
