#include "langvec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace langvec {

Shape::Shape(std::initializer_list<std::size_t> dims) : Shape(std::span<const std::size_t>(dims.begin(), dims.size())) {}

Shape::Shape(std::span<const std::size_t> dims) {
  if (dims.size() > kMaxRank) {
    throw DimensionError("rank " + std::to_string(dims.size()) + " exceeds the supported maximum of " +
                         std::to_string(kMaxRank));
  }
  for (std::size_t d : dims) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive");
    dims_[rank_++] = d;
  }
}

std::size_t Shape::num_elements() const {
  std::size_t n = 1;
  for (std::size_t d : *this) n *= d;
  return n;
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < rank_; ++i) {
    if (i) os << "x";
    os << dims_[i];
  }
  os << ']';
  return os.str();
}

bool operator==(const Shape& a, const Shape& b) {
  return a.rank_ == b.rank_ && std::equal(a.begin(), a.end(), b.begin());
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(shape), data_(shape.num_elements(), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape_.num_elements()) {
    throw DimensionError("tensor of shape " + shape_.str() + " needs " + std::to_string(shape_.num_elements()) +
                         " values, got " + std::to_string(data_.size()));
  }
}

template <typename T>
Tensor<T> Tensor<T>::vector(std::initializer_list<T> values) {
  return Tensor(Shape{values.size()}, std::vector<T>(values));
}

template <typename T>
Tensor<T> Tensor<T>::matrix(std::size_t rows, std::size_t cols, std::initializer_list<T> values) {
  return Tensor(Shape{rows, cols}, std::vector<T>(values));
}

template <typename T>
void Tensor<T>::reshape(const Shape& shape) {
  shape_ = shape;
  data_.resize(shape.num_elements());
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
void Tensor<T>::check_finite(std::string_view what) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericError(std::string(what) + ": non-finite value " + std::to_string(data_[i]) + " at flat index " +
                         std::to_string(i));
    }
  }
}

template class Tensor<float>;
template class Tensor<double>;

namespace kernels {

template <typename T>
void vec_mat(std::span<const T> x, const Tensor<T>& w, std::span<T> out) {
  const std::size_t n = w.dim(1);
  std::fill(out.begin(), out.end(), T{0});
  const T* wp = w.data();
  T* o = out.data();
  for (std::size_t p = 0; p < x.size(); ++p, wp += n) {
    const T xp = x[p];
    if (xp == T{0}) continue;
    for (std::size_t j = 0; j < n; ++j) o[j] += xp * wp[j];
  }
}

template <typename T>
void mat_mat(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n) {
  std::fill(out, out + m * n, T{0});
  for (std::size_t i = 0; i < m; ++i) {
    T* o = out + i * n;
    const T* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T ap = ai[p];
      if (ap == T{0}) continue;
      const T* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += ap * bp[j];
    }
  }
}

template <typename T>
T standardize(std::span<const T> x, std::span<T> xhat) {
  const std::size_t d = x.size();
  T mean{0};
  for (T v : x) mean += v;
  mean /= static_cast<T>(d);
  T var{0};
  for (T v : x) var += (v - mean) * (v - mean);
  var /= static_cast<T>(d);
  const T inv = T{1} / std::sqrt(var + static_cast<T>(kLayerNormEpsilon));
  for (std::size_t i = 0; i < d; ++i) xhat[i] = (x[i] - mean) * inv;
  return inv;
}

template <typename T>
T sigmoid(T x) {
  return T{1} / (T{1} + std::exp(-x));
}

template <typename T>
double log_sum_exp(std::span<const T> z) {
  double mx = -INFINITY;
  for (T v : z) mx = std::max(mx, static_cast<double>(v));
  double s = 0.0;
  for (T v : z) s += std::exp(static_cast<double>(v) - mx);
  return mx + std::log(s);
}

template void vec_mat<float>(std::span<const float>, const Tensor<float>&, std::span<float>);
template void vec_mat<double>(std::span<const double>, const Tensor<double>&, std::span<double>);
template void mat_mat<float>(const float*, const float*, float*, std::size_t, std::size_t, std::size_t);
template void mat_mat<double>(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);
template float standardize<float>(std::span<const float>, std::span<float>);
template double standardize<double>(std::span<const double>, std::span<double>);
template float sigmoid<float>(float);
template double sigmoid<double>(double);
template double log_sum_exp<float>(std::span<const float>);
template double log_sum_exp<double>(std::span<const double>);

}  // namespace kernels

namespace {

// Rank-1 operands act as a single row.
std::pair<std::size_t, std::size_t> as_matrix(const Shape& s) {
  if (s.rank() == 1) return {1, s[0]};
  if (s.rank() == 2) return {s[0], s[1]};
  throw DimensionError("expected a vector or matrix, got shape " + s.str());
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  const auto [m, k] = as_matrix(a.shape());
  if (b.rank() != 2 || b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree for " + a.shape().str() + " x " + b.shape().str());
  }
  const std::size_t n = b.dim(1);
  Tensor<T> out(a.rank() == 1 ? Shape{n} : Shape{m, n});
  kernels::mat_mat(a.data(), b.data(), out.data(), m, k, n);
  return out;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias) {
  const std::size_t d = x.shape().back();
  if (gain.size() != d || bias.size() != d || x.rank() == 0) {
    throw DimensionError("layer_norm: x " + x.shape().str() + " with gain " + gain.shape().str() + " and bias " +
                         bias.shape().str());
  }
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < x.size() / d; ++r) {
    std::span<const T> xr(x.data() + r * d, d);
    std::span<T> yr(out.data() + r * d, d);
    kernels::standardize(xr, yr);
    for (std::size_t i = 0; i < d; ++i) yr[i] = gain[i] * yr[i] + bias[i];
  }
  return out;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  Tensor<T> out(logits.shape());
  const double lse = kernels::log_sum_exp(logits.values());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<T>(std::exp(logits[i] - lse));
  return out;
}

template <typename T>
double softmax_xent(const Tensor<T>& logits, std::size_t target) {
  if (target >= logits.size()) {
    throw IndexError("softmax_xent: target " + std::to_string(target) + " outside [0, " +
                     std::to_string(logits.size()) + ")");
  }
  return kernels::log_sum_exp(logits.values()) - static_cast<double>(logits[target]);
}

template Tensor<float> matmul(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> matmul(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> layer_norm(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> layer_norm(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&);
template Tensor<float> softmax(const Tensor<float>&);
template Tensor<double> softmax(const Tensor<double>&);
template double softmax_xent(const Tensor<float>&, std::size_t);
template double softmax_xent(const Tensor<double>&, std::size_t);

}  // namespace langvec
