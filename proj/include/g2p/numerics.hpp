// Copyright (c) 2026 The g2p-multilingual Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense row-major tensors with a dynamic reverse-mode tape.
//
// Every op takes the Tape it records onto. A Tape constructed with
// recording=false evaluates the same kernels without keeping backward
// rules, which is what inference paths use.
//
// Kernels compute each output row from the matching input rows only, in a
// fixed summation order, so a row's value never depends on how many other
// rows share the batch.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "g2p/errors.hpp"
#include "g2p/util.hpp"

namespace g2p::nn {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, bool requires_grad = false)
      : impl_(std::make_shared<Impl>()) {
    validate(shape);
    impl_->data.assign(shape_size(shape), 0.0);
    impl_->shape = std::move(shape);
    impl_->requires_grad = requires_grad;
  }

  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false)
      : impl_(std::make_shared<Impl>()) {
    validate(shape);
    if (shape_size(shape) != values.size()) {
      throw DimensionError("tensor of shape " + shape_str(shape) + " cannot hold " +
                           std::to_string(values.size()) + " values");
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(values);
    impl_->requires_grad = requires_grad;
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return Tensor({1}, {v}, requires_grad);
  }

  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false) {
    std::vector<double> values;
    std::size_t cols = rows.size() ? rows.begin()->size() : 0;
    for (const auto& r : rows) {
      if (r.size() != cols) throw DimensionError("ragged matrix literal");
      values.insert(values.end(), r.begin(), r.end());
    }
    return Tensor({rows.size(), cols}, std::move(values), requires_grad);
  }

  bool defined() const { return static_cast<bool>(impl_); }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->data.size(); }
  std::size_t rows() const { return rank() == 1 ? 1 : impl_->shape[0]; }
  std::size_t cols() const { return impl_->shape.back(); }

  std::span<double> data() { return impl_->data; }
  std::span<const double> data() const { return impl_->data; }
  double* ptr() { return impl_->data.data(); }
  const double* ptr() const { return impl_->data.data(); }

  double& at(std::size_t i, std::size_t j) { return impl_->data[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return impl_->data[i * cols() + j]; }
  double item() const {
    if (size() != 1) throw ContractError("item() on non-scalar tensor " + shape_str(shape()));
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }

  bool has_grad() const { return !impl_->grad.empty(); }
  /// Gradient buffer, allocated (zeroed) on first access. Tensors are
  /// handles, so the buffer is writable through const handles too.
  std::span<double> grad() const {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
    return impl_->grad;
  }
  double* grad_ptr() const { return grad().data(); }
  void zero_grad() const { std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0); }
  void drop_grad() const { impl_->grad.clear(); impl_->grad.shrink_to_fit(); }

  /// Deep copy with no gradient buffer.
  Tensor clone() const {
    return Tensor(impl_->shape, impl_->data, impl_->requires_grad);
  }

  bool same(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
  };

  static void validate(const Shape& s) {
    if (s.empty()) throw DimensionError("tensor shape must have at least one dimension");
    for (auto d : s) {
      if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_str(s));
    }
  }

  std::shared_ptr<Impl> impl_;
};

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void check_finite(const Tensor& t, const std::string& what) {
  if (!all_finite(t.data())) throw NumericalError("non-finite value in " + what);
}

/// Ordered record of backward rules for one forward pass.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  /// Registers `out` and its backward rule when `out` requires a gradient.
  void record(const Tensor& out, std::function<void()> rule) {
    if (!recording_ || !out.requires_grad()) return;
    nodes_.push_back({out, std::move(rule)});
  }

  /// Seeds d(loss)/d(loss) = 1 and replays rules newest-first. Gradients of
  /// leaf tensors accumulate across calls; intermediate buffers are reset
  /// on each call.
  void backward(Tensor loss) {
    if (loss.size() != 1) {
      throw ContractError("backward: loss must be a scalar, got shape " + shape_str(loss.shape()));
    }
    if (!loss.requires_grad()) {
      throw ContractError("backward: loss does not depend on any trainable tensor");
    }
    for (auto& n : nodes_) {
      n.out.grad();
      n.out.zero_grad();
    }
    loss.grad()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->rule();
  }

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Tensor out;
    std::function<void()> rule;
  };
  bool recording_;
  std::vector<Node> nodes_;
};

namespace detail {

inline bool any_grad(std::initializer_list<const Tensor*> ts) {
  for (auto* t : ts) {
    if (t->requires_grad()) return true;
  }
  return false;
}

inline void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got shape " + shape_str(t.shape()));
  }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

// y[m,n] += a[m,k] * b[k,n]
inline void gemm_acc(const double* __restrict a, const double* __restrict b, double* __restrict y,
                     std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* __restrict yi = y + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* __restrict bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) yi[j] += av * bp[j];
    }
  }
}

// da[m,k] += dy[m,n] * b[k,n]^T
inline void gemm_nt_acc(const double* __restrict dy, const double* __restrict b,
                        double* __restrict da, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* dyi = dy + i * n;
    double* dai = da + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += dyi[j] * bp[j];
      dai[p] += s;
    }
  }
}

// db[k,n] += a[m,k]^T * dy[m,n]
inline void gemm_tn_acc(const double* __restrict a, const double* __restrict dy,
                        double* __restrict db, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* dyi = dy + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      double* __restrict dbp = db + p * n;
      for (std::size_t j = 0; j < n; ++j) dbp[j] += av * dyi[j];
    }
  }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

/// a[m,k] * b[k,n].
inline Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  detail::require_rank2(a, "matmul");
  detail::require_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  Tensor y({m, n}, detail::any_grad({&a, &b}));
  detail::gemm_acc(a.ptr(), b.ptr(), y.ptr(), m, k, n);
  tape.record(y, [a, b, y, m, k, n]() mutable {
    if (a.requires_grad()) detail::gemm_nt_acc(y.grad().data(), b.ptr(), a.grad_ptr(), m, k, n);
    if (b.requires_grad()) detail::gemm_tn_acc(a.ptr(), y.grad().data(), b.grad_ptr(), m, k, n);
  });
  return y;
}

enum class Pointwise { add, mul, tanh, sigmoid };

/// Pointwise op. Binary ops (add, mul) need `b` with the same shape as `a`;
/// unary ops ignore it.
inline Tensor elementwise(Tape& tape, Pointwise op, const Tensor& a, const Tensor& b = {}) {
  const bool binary = op == Pointwise::add || op == Pointwise::mul;
  if (binary) {
    if (!b.defined()) throw ContractError("elementwise: binary op needs two operands");
    detail::require_same_shape(a, b, "elementwise");
  }
  const bool rg = binary ? detail::any_grad({&a, &b}) : a.requires_grad();
  Tensor y(a.shape(), rg);
  const std::size_t n = a.size();
  const double* x = a.ptr();
  double* out = y.ptr();
  switch (op) {
    case Pointwise::add: {
      const double* z = b.ptr();
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + z[i];
      tape.record(y, [a, b, y, n]() mutable {
        const double* g = y.grad().data();
        if (a.requires_grad()) {
          double* ga = a.grad_ptr();
          for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
        }
        if (b.requires_grad()) {
          double* gb = b.grad_ptr();
          for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
        }
      });
      break;
    }
    case Pointwise::mul: {
      const double* z = b.ptr();
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * z[i];
      tape.record(y, [a, b, y, n]() mutable {
        const double* g = y.grad().data();
        if (a.requires_grad()) {
          double* ga = a.grad_ptr();
          const double* bv = b.ptr();
          for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * bv[i];
        }
        if (b.requires_grad()) {
          double* gb = b.grad_ptr();
          const double* av = a.ptr();
          for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * av[i];
        }
      });
      break;
    }
    case Pointwise::tanh: {
      for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
      tape.record(y, [a, y, n]() mutable {
        const double* g = y.grad().data();
        const double* yv = y.ptr();
        double* ga = a.grad_ptr();
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * (1.0 - yv[i] * yv[i]);
      });
      break;
    }
    case Pointwise::sigmoid: {
      for (std::size_t i = 0; i < n; ++i) out[i] = detail::sigmoid(x[i]);
      tape.record(y, [a, y, n]() mutable {
        const double* g = y.grad().data();
        const double* yv = y.ptr();
        double* ga = a.grad_ptr();
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * yv[i] * (1.0 - yv[i]);
      });
      break;
    }
  }
  return y;
}

inline Tensor add(Tape& t, const Tensor& a, const Tensor& b) { return elementwise(t, Pointwise::add, a, b); }
inline Tensor mul(Tape& t, const Tensor& a, const Tensor& b) { return elementwise(t, Pointwise::mul, a, b); }
inline Tensor tanh(Tape& t, const Tensor& a) { return elementwise(t, Pointwise::tanh, a); }
inline Tensor sigmoid(Tape& t, const Tensor& a) { return elementwise(t, Pointwise::sigmoid, a); }

/// x[m,n] + bias[1,n] broadcast over rows; the only broadcast supported.
inline Tensor add_bias(Tape& tape, const Tensor& x, const Tensor& bias) {
  detail::require_rank2(x, "add_bias");
  if (bias.size() != x.cols()) {
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " does not fit rows of " +
                         shape_str(x.shape()));
  }
  const std::size_t m = x.rows(), n = x.cols();
  Tensor y(x.shape(), detail::any_grad({&x, &bias}));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) y.ptr()[i * n + j] = x.ptr()[i * n + j] + bias.ptr()[j];
  }
  tape.record(y, [x, bias, y, m, n]() mutable {
    const double* g = y.grad().data();
    if (x.requires_grad()) {
      double* gx = x.grad_ptr();
      for (std::size_t i = 0; i < m * n; ++i) gx[i] += g[i];
    }
    if (bias.requires_grad()) {
      double* gb = bias.grad_ptr();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
      }
    }
  });
  return y;
}

/// Horizontal concatenation of matrices with equal row counts.
inline Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: nothing to concatenate");
  const std::size_t m = parts.front().rows();
  std::size_t total = 0;
  bool rg = false;
  for (const auto& p : parts) {
    detail::require_rank2(p, "concat_cols");
    if (p.rows() != m) {
      throw DimensionError("concat_cols: row mismatch " + shape_str(parts.front().shape()) + " vs " +
                           shape_str(p.shape()));
    }
    total += p.cols();
    rg = rg || p.requires_grad();
  }
  Tensor y({m, total}, rg);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < m; ++i) {
      std::copy_n(p.ptr() + i * w, w, y.ptr() + i * total + offset);
    }
    offset += w;
  }
  tape.record(y, [parts, y, m, total]() mutable {
    const double* g = y.grad().data();
    std::size_t off = 0;
    for (auto& p : parts) {
      const std::size_t w = p.cols();
      if (p.requires_grad()) {
        double* gp = p.grad_ptr();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < w; ++j) gp[i * w + j] += g[i * total + off + j];
        }
      }
      off += w;
    }
  });
  return y;
}

/// Columns [begin, begin+width) of x.
inline Tensor slice_cols(Tape& tape, const Tensor& x, std::size_t begin, std::size_t width) {
  detail::require_rank2(x, "slice_cols");
  const std::size_t m = x.rows(), n = x.cols();
  if (width == 0 || begin + width > n) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + "," + std::to_string(begin + width) +
                         ") out of range for " + shape_str(x.shape()));
  }
  Tensor y({m, width}, x.requires_grad());
  for (std::size_t i = 0; i < m; ++i) std::copy_n(x.ptr() + i * n + begin, width, y.ptr() + i * width);
  tape.record(y, [x, y, m, n, begin, width]() mutable {
    const double* g = y.grad().data();
    double* gx = x.grad_ptr();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < width; ++j) gx[i * n + begin + j] += g[i * width + j];
    }
  });
  return y;
}

/// Embedding lookup: row `indices[i]` of table becomes row i.
inline Tensor gather_rows(Tape& tape, const Tensor& table, std::span<const int> indices) {
  detail::require_rank2(table, "gather_rows");
  if (indices.empty()) throw ContractError("gather_rows: no indices");
  const std::size_t n = table.cols();
  for (int idx : indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= table.rows()) {
      throw ContractError("gather_rows: index " + std::to_string(idx) + " outside table of " +
                          std::to_string(table.rows()) + " rows");
    }
  }
  Tensor y({indices.size(), n}, table.requires_grad());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(table.ptr() + static_cast<std::size_t>(indices[i]) * n, n, y.ptr() + i * n);
  }
  std::vector<int> idx(indices.begin(), indices.end());
  tape.record(y, [table, y, idx = std::move(idx), n]() mutable {
    const double* g = y.grad().data();
    double* gt = table.grad_ptr();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      double* row = gt + static_cast<std::size_t>(idx[i]) * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += g[i * n + j];
    }
  });
  return y;
}

/// Row i of the result is taken from `chosen` when keep[i] is set and from
/// `fallback` otherwise. Used to freeze recurrent state on padding.
inline Tensor select_rows(Tape& tape, std::span<const std::uint8_t> keep, const Tensor& chosen,
                          const Tensor& fallback) {
  detail::require_rank2(chosen, "select_rows");
  detail::require_same_shape(chosen, fallback, "select_rows");
  const std::size_t m = chosen.rows(), n = chosen.cols();
  if (keep.size() != m) throw DimensionError("select_rows: mask length differs from row count");
  Tensor y(chosen.shape(), detail::any_grad({&chosen, &fallback}));
  for (std::size_t i = 0; i < m; ++i) {
    const Tensor& src = keep[i] ? chosen : fallback;
    std::copy_n(src.ptr() + i * n, n, y.ptr() + i * n);
  }
  std::vector<std::uint8_t> mask(keep.begin(), keep.end());
  tape.record(y, [chosen, fallback, y, mask = std::move(mask), m, n]() mutable {
    const double* g = y.grad().data();
    for (std::size_t i = 0; i < m; ++i) {
      const Tensor& dst = mask[i] ? chosen : fallback;
      if (!dst.requires_grad()) continue;
      double* gd = dst.grad_ptr() + i * n;
      for (std::size_t j = 0; j < n; ++j) gd[j] += g[i * n + j];
    }
  });
  return y;
}

/// Per-row inner product: y[i] = <a[i,:], b[i,:]>, shape [m,1].
inline Tensor row_dot(Tape& tape, const Tensor& a, const Tensor& b) {
  detail::require_rank2(a, "row_dot");
  detail::require_same_shape(a, b, "row_dot");
  const std::size_t m = a.rows(), n = a.cols();
  Tensor y({m, 1}, detail::any_grad({&a, &b}));
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a.ptr()[i * n + j] * b.ptr()[i * n + j];
    y.ptr()[i] = s;
  }
  tape.record(y, [a, b, y, m, n]() mutable {
    const double* g = y.grad().data();
    if (a.requires_grad()) {
      double* ga = a.grad_ptr();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[i] * b.ptr()[i * n + j];
      }
    }
    if (b.requires_grad()) {
      double* gb = b.grad_ptr();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) gb[i * n + j] += g[i] * a.ptr()[i * n + j];
      }
    }
  });
  return y;
}

/// x[m,n] with row i multiplied by w[i,0].
inline Tensor scale_rows(Tape& tape, const Tensor& x, const Tensor& w) {
  detail::require_rank2(x, "scale_rows");
  if (w.size() != x.rows()) {
    throw DimensionError("scale_rows: weights " + shape_str(w.shape()) + " vs rows of " +
                         shape_str(x.shape()));
  }
  const std::size_t m = x.rows(), n = x.cols();
  Tensor y(x.shape(), detail::any_grad({&x, &w}));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) y.ptr()[i * n + j] = x.ptr()[i * n + j] * w.ptr()[i];
  }
  tape.record(y, [x, w, y, m, n]() mutable {
    const double* g = y.grad().data();
    if (x.requires_grad()) {
      double* gx = x.grad_ptr();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[i * n + j] * w.ptr()[i];
      }
    }
    if (w.requires_grad()) {
      double* gw = w.grad_ptr();
      for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * x.ptr()[i * n + j];
        gw[i] += s;
      }
    }
  });
  return y;
}

/// Multiplies every element by a constant.
inline Tensor scale(Tape& tape, const Tensor& x, double c) {
  Tensor y(x.shape(), x.requires_grad());
  for (std::size_t i = 0; i < x.size(); ++i) y.ptr()[i] = x.ptr()[i] * c;
  tape.record(y, [x, y, c]() mutable {
    const double* g = y.grad().data();
    double* gx = x.grad_ptr();
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g[i] * c;
  });
  return y;
}

/// Sum of all elements as a scalar.
inline Tensor sum(Tape& tape, const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  Tensor y = Tensor::scalar(s, x.requires_grad());
  tape.record(y, [x, y]() mutable {
    const double g = y.grad()[0];
    double* gx = x.grad_ptr();
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g;
  });
  return y;
}

namespace detail {

struct AxisLayout {
  std::size_t outer, n, inner;
};

inline AxisLayout axis_layout(const Shape& s, int axis) {
  const int r = static_cast<int>(s.size());
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) throw DimensionError("softmax: axis out of range for " + shape_str(s));
  AxisLayout l{1, s[static_cast<std::size_t>(axis)], 1};
  for (int d = 0; d < axis; ++d) l.outer *= s[static_cast<std::size_t>(d)];
  for (int d = axis + 1; d < r; ++d) l.inner *= s[static_cast<std::size_t>(d)];
  return l;
}

}  // namespace detail

/// Softmax along `axis` (negative counts from the back), max-subtracted.
inline Tensor softmax(Tape& tape, const Tensor& x, int axis = -1) {
  const auto l = detail::axis_layout(x.shape(), axis);
  Tensor y(x.shape(), x.requires_grad());
  const double* xv = x.ptr();
  double* yv = y.ptr();
  for (std::size_t o = 0; o < l.outer; ++o) {
    for (std::size_t in = 0; in < l.inner; ++in) {
      const std::size_t base = o * l.n * l.inner + in;
      double mx = xv[base];
      for (std::size_t k = 1; k < l.n; ++k) mx = std::max(mx, xv[base + k * l.inner]);
      double z = 0.0;
      for (std::size_t k = 0; k < l.n; ++k) {
        const double e = std::exp(xv[base + k * l.inner] - mx);
        yv[base + k * l.inner] = e;
        z += e;
      }
      for (std::size_t k = 0; k < l.n; ++k) yv[base + k * l.inner] /= z;
    }
  }
  check_finite(y, "softmax output");
  tape.record(y, [x, y, l]() mutable {
    const double* g = y.grad().data();
    const double* yv = y.ptr();
    double* gx = x.grad_ptr();
    for (std::size_t o = 0; o < l.outer; ++o) {
      for (std::size_t in = 0; in < l.inner; ++in) {
        const std::size_t base = o * l.n * l.inner + in;
        double dot = 0.0;
        for (std::size_t k = 0; k < l.n; ++k) dot += g[base + k * l.inner] * yv[base + k * l.inner];
        for (std::size_t k = 0; k < l.n; ++k) {
          const std::size_t i = base + k * l.inner;
          gx[i] += yv[i] * (g[i] - dot);
        }
      }
    }
  });
  return y;
}

/// Row softmax restricted to positions where valid[i*n+j] is set; masked
/// positions get weight exactly zero. Every row needs one valid position.
inline Tensor masked_softmax_rows(Tape& tape, const Tensor& x, std::span<const std::uint8_t> valid) {
  detail::require_rank2(x, "masked_softmax_rows");
  const std::size_t m = x.rows(), n = x.cols();
  if (valid.size() != m * n) throw DimensionError("masked_softmax_rows: mask size mismatch");
  Tensor y(x.shape(), x.requires_grad());
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = x.ptr() + i * n;
    const std::uint8_t* vi = valid.data() + i * n;
    double* yi = y.ptr() + i * n;
    bool any = false;
    double mx = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (vi[j] && (!any || xi[j] > mx)) {
        mx = xi[j];
        any = true;
      }
    }
    if (!any) throw ContractError("masked_softmax_rows: row " + std::to_string(i) + " is fully masked");
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      yi[j] = vi[j] ? std::exp(xi[j] - mx) : 0.0;
      z += yi[j];
    }
    for (std::size_t j = 0; j < n; ++j) yi[j] /= z;
  }
  check_finite(y, "attention weights");
  tape.record(y, [x, y, m, n]() mutable {
    const double* g = y.grad().data();
    double* gx = x.grad_ptr();
    for (std::size_t i = 0; i < m; ++i) {
      const double* yi = y.ptr() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * yi[j];
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += yi[j] * (g[i * n + j] - dot);
    }
  });
  return y;
}

/// Weighted negative log-likelihood of `targets` under row-softmax(logits):
/// sum_i weight[i] * -log softmax(logits[i])[targets[i]], as a scalar.
/// Rows with zero weight contribute nothing (padding).
inline Tensor nll_loss(Tape& tape, const Tensor& logits, std::span<const int> targets,
                       std::span<const double> weights) {
  detail::require_rank2(logits, "nll_loss");
  const std::size_t m = logits.rows(), n = logits.cols();
  if (targets.size() != m || weights.size() != m) {
    throw DimensionError("nll_loss: targets/weights length differs from logits rows");
  }
  std::vector<double> probs(m * n);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const int t = targets[i];
    if (t < 0 || static_cast<std::size_t>(t) >= n) {
      throw ContractError("nll_loss: target " + std::to_string(t) + " outside " + std::to_string(n) +
                          " classes");
    }
    const double* li = logits.ptr() + i * n;
    double mx = li[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, li[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      probs[i * n + j] = std::exp(li[j] - mx);
      z += probs[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) probs[i * n + j] /= z;
    if (weights[i] != 0.0) total += weights[i] * (std::log(z) + mx - li[t]);
  }
  Tensor y = Tensor::scalar(total, logits.requires_grad());
  check_finite(y, "loss");
  std::vector<int> tg(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  tape.record(y, [logits, y, probs = std::move(probs), tg = std::move(tg), w = std::move(w), m,
                  n]() mutable {
    const double g = y.grad()[0];
    double* gl = logits.grad_ptr();
    for (std::size_t i = 0; i < m; ++i) {
      if (w[i] == 0.0) continue;
      const double s = g * w[i];
      for (std::size_t j = 0; j < n; ++j) gl[i * n + j] += s * probs[i * n + j];
      gl[i * n + static_cast<std::size_t>(tg[i])] -= s;
    }
  });
  return y;
}

/// Inverted dropout: zeroes each element with probability `rate` and scales
/// survivors by 1/(1-rate). rate == 0 returns x unchanged.
inline Tensor dropout(Tape& tape, const Tensor& x, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ContractError("dropout: rate must be in [0,1)");
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  for (auto& v : mask) v = draw_unit(rng) < rate ? 0.0 : keep_scale;
  Tensor y(x.shape(), x.requires_grad());
  for (std::size_t i = 0; i < x.size(); ++i) y.ptr()[i] = x.ptr()[i] * mask[i];
  tape.record(y, [x, y, mask = std::move(mask)]() mutable {
    const double* g = y.grad().data();
    double* gx = x.grad_ptr();
    for (std::size_t i = 0; i < mask.size(); ++i) gx[i] += g[i] * mask[i];
  });
  return y;
}

}  // namespace g2p::nn
