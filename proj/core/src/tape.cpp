#include "langvec/tape.hpp"

#include <algorithm>
#include <cmath>

namespace langvec {

namespace {

std::pair<std::size_t, std::size_t> rows_cols(const Shape& s) {
  if (s.rank() == 1) return {1, s[0]};
  if (s.rank() == 2) return {s[0], s[1]};
  throw DimensionError("expected a vector or matrix, got shape " + s.str());
}

// Shape with the last axis replaced.
Shape with_last(const Shape& s, std::size_t last) {
  std::vector<std::size_t> dims(s.begin(), s.end());
  dims.back() = last;
  return Shape(std::span<const std::size_t>(dims));
}

}  // namespace

template <typename T>
void Tape<T>::clear() {
  count_ = 0;
}

template <typename T>
typename Tape<T>::Record& Tape<T>::push(Op op, const Shape& shape, std::initializer_list<std::uint32_t> inputs) {
  if (count_ == records_.size()) records_.emplace_back();
  Record& r = records_[count_++];
  r.op = op;
  auto it = inputs.begin();
  r.in0 = it != inputs.end() ? *it++ : kNone;
  r.in1 = it != inputs.end() ? *it++ : kNone;
  r.in2 = it != inputs.end() ? *it++ : kNone;
  r.index = 0;
  r.factor = T{};
  r.ref = nullptr;
  r.ref_grad = nullptr;
  r.grad_live = false;
  r.requires_grad = false;
  for (std::uint32_t in : inputs) r.requires_grad = r.requires_grad || needs(in);
  if (op != Op::kLeaf) r.value.reshape(shape);
  return r;
}

template <typename T>
const Tensor<T>& Tape<T>::val(std::uint32_t id) const {
  const Record& r = records_[id];
  return r.ref ? *r.ref : r.value;
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  if (v.id >= count_) throw IndexError("tape value " + std::to_string(v.id) + " not recorded");
  return val(v.id);
}

template <typename T>
Tensor<T> Tape<T>::grad(Var v) const {
  if (v.id >= count_) throw IndexError("tape value " + std::to_string(v.id) + " not recorded");
  const Record& r = records_[v.id];
  if (r.ref_grad) return *r.ref_grad;
  if (r.grad_live) return r.grad;
  return Tensor<T>(val(v.id).shape());
}

template <typename T>
Var Tape<T>::constant(const Tensor<T>& value) {
  Record& r = push(Op::kLeaf, value.shape(), {});
  r.value = value;
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var Tape<T>::param(ParamStore<T>& store, ParamId id) {
  Record& r = push(Op::kLeaf, {}, {});
  r.ref = &store.value(id);
  r.ref_grad = &store.grad(id);
  r.requires_grad = true;
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var Tape<T>::frozen(const ParamStore<T>& store, ParamId id) {
  return frozen(store.value(id));
}

template <typename T>
Var Tape<T>::frozen(const Tensor<T>& value) {
  Record& r = push(Op::kLeaf, {}, {});
  r.ref = &value;
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var Tape<T>::matmul(Var a, Var b) {
  const Shape sa = val(a.id).shape();
  const Shape sb = val(b.id).shape();
  const auto [m, k] = rows_cols(sa);
  if (sb.rank() != 2 || sb[0] != k) {
    throw DimensionError("matmul: inner dimensions disagree for " + sa.str() + " x " + sb.str());
  }
  const std::size_t n = sb[1];
  Record& r = push(Op::kMatMul, sa.rank() == 1 ? Shape{n} : Shape{m, n}, {a.id, b.id});
  kernels::mat_mat(val(a.id).data(), val(b.id).data(), r.value.data(), m, k, n);
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var Tape<T>::add(Var a, Var b) {
  const Shape sa = val(a.id).shape();
  if (!(sa == val(b.id).shape())) {
    throw DimensionError("add: shapes " + sa.str() + " and " + val(b.id).shape().str() + " differ");
  }
  Record& r = push(Op::kAdd, sa, {a.id, b.id});
  const T* x = val(a.id).data();
  const T* y = val(b.id).data();
  for (std::size_t i = 0; i < r.value.size(); ++i) r.value[i] = x[i] + y[i];
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var Tape<T>::mul(Var a, Var b) {
  const Shape sa = val(a.id).shape();
  if (!(sa == val(b.id).shape())) {
    throw DimensionError("mul: shapes " + sa.str() + " and " + val(b.id).shape().str() + " differ");
  }
  Record& r = push(Op::kMul, sa, {a.id, b.id});
  const T* x = val(a.id).data();
  const T* y = val(b.id).data();
  for (std::size_t i = 0; i < r.value.size(); ++i) r.value[i] = x[i] * y[i];
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var Tape<T>::sigmoid(Var a) {
  Record& r = push(Op::kSigmoid, val(a.id).shape(), {a.id});
  const T* x = val(a.id).data();
  for (std::size_t i = 0; i < r.value.size(); ++i) r.value[i] = kernels::sigmoid(x[i]);
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var Tape<T>::tanh(Var a) {
  Record& r = push(Op::kTanh, val(a.id).shape(), {a.id});
  const T* x = val(a.id).data();
  for (std::size_t i = 0; i < r.value.size(); ++i) r.value[i] = std::tanh(x[i]);
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var Tape<T>::concat(Var a, Var b) {
  const Shape sa = val(a.id).shape();
  const Shape sb = val(b.id).shape();
  const bool leading_equal = sa.rank() == sb.rank() && sa.rank() >= 1 &&
                             std::equal(sa.begin(), sa.end() - 1, sb.begin());
  if (!leading_equal) throw DimensionError("concat: shapes " + sa.str() + " and " + sb.str() + " do not conform");
  const std::size_t da = sa.back();
  const std::size_t db = sb.back();
  Record& r = push(Op::kConcat, with_last(sa, da + db), {a.id, b.id});
  const std::size_t rows = val(a.id).size() / da;
  const T* x = val(a.id).data();
  const T* y = val(b.id).data();
  T* out = r.value.data();
  for (std::size_t row = 0; row < rows; ++row) {
    out = std::copy_n(x + row * da, da, out);
    out = std::copy_n(y + row * db, db, out);
  }
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var Tape<T>::slice(Var a, std::size_t begin, std::size_t length) {
  const Shape sa = val(a.id).shape();
  if (sa.rank() == 0 || length == 0 || begin + length > sa.back()) {
    throw DimensionError("slice [" + std::to_string(begin) + ", " + std::to_string(begin + length) +
                         ") out of range for shape " + sa.str());
  }
  Record& r = push(Op::kSlice, with_last(sa, length), {a.id});
  r.index = begin;
  const std::size_t d = sa.back();
  const std::size_t rows = val(a.id).size() / d;
  const T* x = val(a.id).data();
  for (std::size_t row = 0; row < rows; ++row) {
    std::copy_n(x + row * d + begin, length, r.value.data() + row * length);
  }
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var Tape<T>::layer_norm(Var x, Var gain, std::optional<Var> bias) {
  const Shape sx = val(x.id).shape();
  if (sx.rank() == 0) throw DimensionError("layer_norm: scalar input");
  const std::size_t d = sx.back();
  if (val(gain.id).size() != d || (bias && val(bias->id).size() != d)) {
    throw DimensionError("layer_norm: x " + sx.str() + " with gain " + val(gain.id).shape().str() +
                         (bias ? " and bias " + val(bias->id).shape().str() : std::string()));
  }
  Record& r = push(Op::kLayerNorm, sx, {x.id, gain.id, bias ? bias->id : kNone});
  const std::size_t rows = r.value.size() / d;
  r.saved.reshape(sx);
  r.saved_aux.reshape(Shape{rows});
  const T* xv = val(x.id).data();
  const T* g = val(gain.id).data();
  const T* b = bias ? val(bias->id).data() : nullptr;
  for (std::size_t row = 0; row < rows; ++row) {
    std::span<const T> xr(xv + row * d, d);
    std::span<T> xhat(r.saved.data() + row * d, d);
    r.saved_aux[row] = kernels::standardize(xr, xhat);
    T* y = r.value.data() + row * d;
    for (std::size_t i = 0; i < d; ++i) y[i] = g[i] * xhat[i] + (b ? b[i] : T{0});
  }
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var Tape<T>::embedding(Var table, std::size_t index) {
  const Shape st = val(table.id).shape();
  if (st.rank() != 2) throw DimensionError("embedding: table must be a matrix, got " + st.str());
  if (index >= st[0]) {
    throw IndexError("embedding: row " + std::to_string(index) + " outside [0, " + std::to_string(st[0]) + ")");
  }
  Record& r = push(Op::kEmbedding, Shape{st[1]}, {table.id});
  r.index = index;
  const T* row = val(table.id).data() + index * st[1];
  std::copy_n(row, st[1], r.value.data());
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var Tape<T>::softmax_xent(Var logits, std::size_t target) {
  const Shape sl = val(logits.id).shape();
  if (sl.rank() != 1) throw DimensionError("softmax_xent: logits must be a vector, got " + sl.str());
  if (target >= sl[0]) {
    throw IndexError("softmax_xent: target " + std::to_string(target) + " outside [0, " + std::to_string(sl[0]) +
                     ")");
  }
  Record& r = push(Op::kSoftmaxXent, Shape{}, {logits.id});
  r.index = target;
  const Tensor<T>& z = val(logits.id);
  const double lse = kernels::log_sum_exp(z.values());
  r.saved.reshape(sl);
  for (std::size_t i = 0; i < z.size(); ++i) r.saved[i] = static_cast<T>(std::exp(z[i] - lse));
  r.value[0] = static_cast<T>(lse - static_cast<double>(z[target]));
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var Tape<T>::sum(Var a) {
  Record& r = push(Op::kSum, Shape{}, {a.id});
  T s{0};
  for (T v : val(a.id).values()) s += v;
  r.value[0] = s;
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Var Tape<T>::scale(Var a, T factor) {
  Record& r = push(Op::kScale, val(a.id).shape(), {a.id});
  r.factor = factor;
  const T* x = val(a.id).data();
  for (std::size_t i = 0; i < r.value.size(); ++i) r.value[i] = factor * x[i];
  return Var{static_cast<std::uint32_t>(count_ - 1)};
}

template <typename T>
Tensor<T>& Tape<T>::grad_slot(std::uint32_t id) {
  Record& r = records_[id];
  if (r.ref_grad) return *r.ref_grad;
  if (!r.grad_live) {
    r.grad.reshape(val(id).shape());
    r.grad.fill(T{0});
    r.grad_live = true;
  }
  return r.grad;
}

template <typename T>
void Tape<T>::backward(Var loss, T seed) {
  if (loss.id >= count_) throw ContractError("backward: loss was not recorded on this tape");
  if (val(loss.id).size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + val(loss.id).shape().str());
  }
  for (std::size_t i = 0; i < count_; ++i) records_[i].grad_live = false;
  if (!records_[loss.id].requires_grad) return;
  grad_slot(loss.id)[0] += seed;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    const Record& r = records_[i];
    if (r.op == Op::kLeaf || !r.requires_grad || !r.grad_live) continue;
    backprop(static_cast<std::uint32_t>(i));
  }
}

template <typename T>
void Tape<T>::backprop(std::uint32_t id) {
  // Records are stable here: no push happens during the backward pass.
  const Record& r = records_[id];
  const T* g = r.grad.data();
  const std::size_t n = r.value.size();
  switch (r.op) {
    case Op::kLeaf:
      break;
    case Op::kMatMul: {
      const Tensor<T>& a = val(r.in0);
      const Tensor<T>& b = val(r.in1);
      const auto [m, k] = rows_cols(a.shape());
      const std::size_t cols = b.dim(1);
      if (needs(r.in0)) {
        T* da = grad_slot(r.in0).data();
        for (std::size_t i = 0; i < m; ++i) {
          const T* gi = g + i * cols;
          for (std::size_t p = 0; p < k; ++p) {
            const T* bp = b.data() + p * cols;
            T s{0};
            for (std::size_t j = 0; j < cols; ++j) s += gi[j] * bp[j];
            da[i * k + p] += s;
          }
        }
      }
      if (needs(r.in1)) {
        T* db = grad_slot(r.in1).data();
        for (std::size_t i = 0; i < m; ++i) {
          const T* gi = g + i * cols;
          for (std::size_t p = 0; p < k; ++p) {
            const T ap = a.data()[i * k + p];
            if (ap == T{0}) continue;
            T* dbp = db + p * cols;
            for (std::size_t j = 0; j < cols; ++j) dbp[j] += ap * gi[j];
          }
        }
      }
      break;
    }
    case Op::kAdd:
      for (std::uint32_t in : {r.in0, r.in1}) {
        if (!needs(in)) continue;
        T* d = grad_slot(in).data();
        for (std::size_t i = 0; i < n; ++i) d[i] += g[i];
      }
      break;
    case Op::kMul: {
      if (needs(r.in0)) {
        const T* y = val(r.in1).data();
        T* d = grad_slot(r.in0).data();
        for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * y[i];
      }
      if (needs(r.in1)) {
        const T* x = val(r.in0).data();
        T* d = grad_slot(r.in1).data();
        for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * x[i];
      }
      break;
    }
    case Op::kSigmoid:
      if (needs(r.in0)) {
        const T* y = r.value.data();
        T* d = grad_slot(r.in0).data();
        for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * y[i] * (T{1} - y[i]);
      }
      break;
    case Op::kTanh:
      if (needs(r.in0)) {
        const T* y = r.value.data();
        T* d = grad_slot(r.in0).data();
        for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * (T{1} - y[i] * y[i]);
      }
      break;
    case Op::kConcat: {
      const std::size_t da = val(r.in0).shape().back();
      const std::size_t db = val(r.in1).shape().back();
      const std::size_t rows = n / (da + db);
      if (needs(r.in0)) {
        T* d = grad_slot(r.in0).data();
        for (std::size_t row = 0; row < rows; ++row) {
          for (std::size_t i = 0; i < da; ++i) d[row * da + i] += g[row * (da + db) + i];
        }
      }
      if (needs(r.in1)) {
        T* d = grad_slot(r.in1).data();
        for (std::size_t row = 0; row < rows; ++row) {
          for (std::size_t i = 0; i < db; ++i) d[row * db + i] += g[row * (da + db) + da + i];
        }
      }
      break;
    }
    case Op::kSlice:
      if (needs(r.in0)) {
        const std::size_t d_in = val(r.in0).shape().back();
        const std::size_t len = r.value.shape().back();
        const std::size_t rows = n / len;
        T* d = grad_slot(r.in0).data();
        for (std::size_t row = 0; row < rows; ++row) {
          for (std::size_t i = 0; i < len; ++i) d[row * d_in + r.index + i] += g[row * len + i];
        }
      }
      break;
    case Op::kLayerNorm: {
      const std::size_t d = r.value.shape().back();
      const std::size_t rows = n / d;
      const T* gain = val(r.in1).data();
      const T* xhat = r.saved.data();
      if (needs(r.in1)) {
        T* dg = grad_slot(r.in1).data();
        for (std::size_t row = 0; row < rows; ++row) {
          for (std::size_t i = 0; i < d; ++i) dg[i] += g[row * d + i] * xhat[row * d + i];
        }
      }
      if (needs(r.in2)) {
        T* dbias = grad_slot(r.in2).data();
        for (std::size_t row = 0; row < rows; ++row) {
          for (std::size_t i = 0; i < d; ++i) dbias[i] += g[row * d + i];
        }
      }
      if (needs(r.in0)) {
        T* dx = grad_slot(r.in0).data();
        for (std::size_t row = 0; row < rows; ++row) {
          const T* gr = g + row * d;
          const T* xr = xhat + row * d;
          T m1{0};
          T m2{0};
          for (std::size_t i = 0; i < d; ++i) {
            const T dxhat = gr[i] * gain[i];
            m1 += dxhat;
            m2 += dxhat * xr[i];
          }
          m1 /= static_cast<T>(d);
          m2 /= static_cast<T>(d);
          const T inv = r.saved_aux[row];
          for (std::size_t i = 0; i < d; ++i) dx[row * d + i] += inv * (gr[i] * gain[i] - m1 - xr[i] * m2);
        }
      }
      break;
    }
    case Op::kEmbedding:
      if (needs(r.in0)) {
        T* d = grad_slot(r.in0).data() + r.index * n;
        for (std::size_t i = 0; i < n; ++i) d[i] += g[i];
      }
      break;
    case Op::kSoftmaxXent:
      if (needs(r.in0)) {
        T* d = grad_slot(r.in0).data();
        const T* p = r.saved.data();
        for (std::size_t i = 0; i < r.saved.size(); ++i) d[i] += g[0] * p[i];
        d[r.index] -= g[0];
      }
      break;
    case Op::kSum:
      if (needs(r.in0)) {
        Tensor<T>& d = grad_slot(r.in0);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[0];
      }
      break;
    case Op::kScale:
      if (needs(r.in0)) {
        T* d = grad_slot(r.in0).data();
        for (std::size_t i = 0; i < n; ++i) d[i] += r.factor * g[i];
      }
      break;
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace langvec
