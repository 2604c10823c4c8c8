#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "langvec/error.hpp"

namespace langvec {

/// Dimensions of a tensor, outermost first. Rank 0 denotes a scalar.
class Shape {
 public:
  static constexpr std::size_t kMaxRank = 4;

  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::span<const std::size_t> dims);

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t axis) const { return dims_[axis]; }
  std::size_t back() const { return rank_ == 0 ? 1 : dims_[rank_ - 1]; }
  std::size_t num_elements() const;

  const std::size_t* begin() const { return dims_.data(); }
  const std::size_t* end() const { return dims_.data() + rank_; }

  std::string str() const;

  friend bool operator==(const Shape& a, const Shape& b);

 private:
  std::array<std::size_t, kMaxRank> dims_{};
  std::size_t rank_ = 0;
};

/// Dense row-major array of reals.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() : shape_{}, data_(1, T{0}) {}
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::vector<T> values);

  static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }
  static Tensor vector(std::initializer_list<T> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<T> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.rank(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_[axis]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::size_t row, std::size_t col) { return data_[row * shape_.back() + col]; }
  const T& at(std::size_t row, std::size_t col) const { return data_[row * shape_.back() + col]; }

  /// Row `r` of a rank-2 tensor.
  std::span<T> row(std::size_t r) { return {data_.data() + r * shape_.back(), shape_.back()}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * shape_.back(), shape_.back()};
  }

  /// Reuses storage; contents are unspecified afterwards unless `fill` is used.
  void reshape(const Shape& shape);
  void fill(T value);

  bool all_finite() const;
  /// Throws NumericError naming `what` and the first offending index.
  void check_finite(std::string_view what) const;

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

// Raw kernels shared by the recorded (differentiable) path and the inference
// path. All loops run in a fixed order so results are reproducible bit for bit.
namespace kernels {

/// out[n] = x[k] * w[k x n]; `out` is overwritten.
template <typename T>
void vec_mat(std::span<const T> x, const Tensor<T>& w, std::span<T> out);

/// out[m x n] = a[m x k] * b[k x n] for raw row-major buffers.
template <typename T>
void mat_mat(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n);

/// Normalizes `x` over its whole extent; writes the standardized values to
/// `xhat` and returns 1/sqrt(var + eps).
template <typename T>
T standardize(std::span<const T> x, std::span<T> xhat);

template <typename T>
T sigmoid(T x);

/// log(sum(exp(z))), max-subtracted.
template <typename T>
double log_sum_exp(std::span<const T> z);

}  // namespace kernels

/// Epsilon added to the variance inside layer normalization.
inline constexpr double kLayerNormEpsilon = 1e-5;

// Plain (non-recorded) operations used by tests and inference code.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias);
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);
/// -log softmax(logits)[target] in nats.
template <typename T>
double softmax_xent(const Tensor<T>& logits, std::size_t target);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace langvec
