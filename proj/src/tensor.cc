// Copyright 2026 The dictg2p Authors
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

#include "dictg2p/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dictg2p {

template <typename T>
Tensor<T> Tensor<T>::zeros(int rows, int cols, bool requires_grad) {
  Tensor t;
  t.s_ = std::make_shared<Storage>();
  t.s_->rows = rows;
  t.s_->cols = cols;
  t.s_->value.assign(static_cast<size_t>(rows) * cols, T(0));
  t.s_->requires_grad = requires_grad;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::full(int rows, int cols, T value, bool requires_grad) {
  Tensor t = zeros(rows, cols, requires_grad);
  std::fill(t.s_->value.begin(), t.s_->value.end(), value);
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::from_data(int rows, int cols, std::vector<T> values,
                               bool requires_grad) {
  if (values.size() != static_cast<size_t>(rows) * cols) {
    throw ShapeError("from_data: " + std::to_string(values.size()) +
                     " values for shape [" + std::to_string(rows) + ", " +
                     std::to_string(cols) + "]");
  }
  Tensor t;
  t.s_ = std::make_shared<Storage>();
  t.s_->rows = rows;
  t.s_->cols = cols;
  t.s_->value = std::move(values);
  t.s_->requires_grad = requires_grad;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value) {
  return from_data(1, 1, {value});
}

template <typename T>
Tensor<T> Tensor<T>::one_hot(int size, int index) {
  Tensor t = zeros(1, size);
  t.at(0, index) = T(1);
  return t;
}

template <typename T>
std::string Tensor<T>::shape_str() const {
  if (!defined()) return "[undefined]";
  return "[" + std::to_string(rows()) + ", " + std::to_string(cols()) + "]";
}

template <typename T>
bool Tensor<T>::same_values(const Tensor& other) const {
  return rows() == other.rows() && cols() == other.cols() &&
         s_->value == other.s_->value;
}

template <typename T>
bool Tensor<T>::all_finite() const {
  for (T v : s_->value) {
    if (!std::isfinite(static_cast<double>(v))) return false;
  }
  return true;
}

template <typename T>
void Tape<T>::backward(Tensor<T>& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + loss.shape_str());
  }
  if (records_.empty()) {
    if (consumed_) {
      throw Error("backward called twice without a new forward pass");
    }
    throw Error("backward on an empty tape");
  }
  loss.ensure_grad();
  loss.grad()[0] = T(1);
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
  records_.clear();
  consumed_ = true;
}

template <typename T>
void check_shape(bool ok, const std::string& op, const Tensor<T>& a,
                 const Tensor<T>& b) {
  if (!ok) {
    throw ShapeError(op + ": incompatible shapes " + a.shape_str() + " and " +
                     b.shape_str());
  }
}

namespace {

template <typename T>
void record_if(Tape<T>* tape, std::function<void()> fn) {
  if (tape != nullptr) tape->record(std::move(fn));
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape) {
  check_shape(a.cols() == b.rows(), "matmul", a, b);
  const int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor<T> out = Tensor<T>::zeros(m, n);
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const T av = pa[i * k + p];
      if (av == T(0)) continue;
      const T* brow = pb + static_cast<size_t>(p) * n;
      T* orow = po + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  record_if<T>(tape, [a, b, out]() mutable {
    const int m = a.rows(), k = a.cols(), n = b.cols();
    const T* go = out.grad();
    T* ga = const_cast<Tensor<T>&>(a).grad();
    T* gb = const_cast<Tensor<T>&>(b).grad();
    const T* pa = a.data();
    const T* pb = b.data();
    // dA += dO * B^T, dB += A^T * dO
    for (int i = 0; i < m; ++i) {
      const T* grow = go + static_cast<size_t>(i) * n;
      for (int p = 0; p < k; ++p) {
        const T* brow = pb + static_cast<size_t>(p) * n;
        const T av = pa[i * k + p];
        T acc = T(0);
        T* gbrow = gb + static_cast<size_t>(p) * n;
        for (int j = 0; j < n; ++j) {
          acc += grow[j] * brow[j];
          gbrow[j] += grow[j] * av;
        }
        ga[i * k + p] += acc;
      }
    }
  });
  return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a, Tape<T>* tape) {
  const int m = a.rows(), n = a.cols();
  Tensor<T> out = Tensor<T>::zeros(n, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
  record_if<T>(tape, [a, out]() mutable {
    T* ga = const_cast<Tensor<T>&>(a).grad();
    const T* go = out.grad();
    const int m = a.rows(), n = a.cols();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) ga[i * n + j] += go[j * m + i];
  });
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape) {
  check_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add", a, b);
  Tensor<T> out = Tensor<T>::zeros(a.rows(), a.cols());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
  record_if<T>(tape, [a, b, out]() mutable {
    T* ga = const_cast<Tensor<T>&>(a).grad();
    T* gb = const_cast<Tensor<T>&>(b).grad();
    const T* go = out.grad();
    const int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) {
      ga[i] += go[i];
      gb[i] += go[i];
    }
  });
  return out;
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias, Tape<T>* tape) {
  check_shape(bias.rows() == 1 && bias.cols() == x.cols(), "add_bias", x, bias);
  Tensor<T> out = Tensor<T>::zeros(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) out.at(i, j) = x.at(i, j) + bias.at(0, j);
  record_if<T>(tape, [x, bias, out]() mutable {
    T* gx = const_cast<Tensor<T>&>(x).grad();
    T* gb = const_cast<Tensor<T>&>(bias).grad();
    const T* go = out.grad();
    const int m = x.rows(), n = x.cols();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        gx[i * n + j] += go[i * n + j];
        gb[j] += go[i * n + j];
      }
  });
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor, Tape<T>* tape) {
  Tensor<T> out = Tensor<T>::zeros(x.rows(), x.cols());
  const int64_t n = x.size();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = x.data()[i] * factor;
  record_if<T>(tape, [x, out, factor]() mutable {
    T* gx = const_cast<Tensor<T>&>(x).grad();
    const T* go = out.grad();
    const int64_t n = x.size();
    for (int64_t i = 0; i < n; ++i) gx[i] += go[i] * factor;
  });
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x, Tape<T>* tape) {
  Tensor<T> out = Tensor<T>::zeros(x.rows(), x.cols());
  const int64_t n = x.size();
  for (int64_t i = 0; i < n; ++i)
    out.data()[i] = x.data()[i] > T(0) ? x.data()[i] : T(0);
  record_if<T>(tape, [x, out]() mutable {
    T* gx = const_cast<Tensor<T>&>(x).grad();
    const T* go = out.grad();
    const int64_t n = x.size();
    for (int64_t i = 0; i < n; ++i)
      if (x.data()[i] > T(0)) gx[i] += go[i];
  });
  return out;
}

template <typename T>
Tensor<T> log(const Tensor<T>& x, Tape<T>* tape) {
  Tensor<T> out = Tensor<T>::zeros(x.rows(), x.cols());
  const int64_t n = x.size();
  for (int64_t i = 0; i < n; ++i)
    out.data()[i] = std::log(x.data()[i]);
  record_if<T>(tape, [x, out]() mutable {
    T* gx = const_cast<Tensor<T>&>(x).grad();
    const T* go = out.grad();
    const int64_t n = x.size();
    for (int64_t i = 0; i < n; ++i) gx[i] += go[i] / x.data()[i];
  });
  return out;
}

template <typename T>
Tensor<T> clamp_min(const Tensor<T>& x, T min_value, Tape<T>* tape) {
  Tensor<T> out = Tensor<T>::zeros(x.rows(), x.cols());
  const int64_t n = x.size();
  for (int64_t i = 0; i < n; ++i)
    out.data()[i] = x.data()[i] > min_value ? x.data()[i] : min_value;
  record_if<T>(tape, [x, out, min_value]() mutable {
    T* gx = const_cast<Tensor<T>&>(x).grad();
    const T* go = out.grad();
    const int64_t n = x.size();
    for (int64_t i = 0; i < n; ++i)
      if (x.data()[i] > min_value) gx[i] += go[i];
  });
  return out;
}

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x, Tape<T>* tape) {
  Tensor<T> out = Tensor<T>::zeros(x.rows(), x.cols());
  const int m = x.rows(), n = x.cols();
  for (int i = 0; i < m; ++i) {
    T mx = x.at(i, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, x.at(i, j));
    T sum = T(0);
    for (int j = 0; j < n; ++j) {
      T e = std::exp(x.at(i, j) - mx);
      out.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < n; ++j) out.at(i, j) /= sum;
  }
  record_if<T>(tape, [x, out]() mutable {
    T* gx = const_cast<Tensor<T>&>(x).grad();
    const T* go = out.grad();
    const int m = x.rows(), n = x.cols();
    for (int i = 0; i < m; ++i) {
      T dot = T(0);
      for (int j = 0; j < n; ++j) dot += go[i * n + j] * out.at(i, j);
      for (int j = 0; j < n; ++j)
        gx[i * n + j] += out.at(i, j) * (go[i * n + j] - dot);
    }
  });
  return out;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps, Tape<T>* tape) {
  check_shape(gamma.rows() == 1 && gamma.cols() == x.cols(), "layer_norm", x,
              gamma);
  check_shape(beta.rows() == 1 && beta.cols() == x.cols(), "layer_norm", x,
              beta);
  const int m = x.rows(), n = x.cols();
  Tensor<T> out = Tensor<T>::zeros(m, n);
  // Normalized values and 1/std are needed by backward; keep them alive in
  // plain buffers captured by the closure.
  auto xhat = std::make_shared<std::vector<T>>(static_cast<size_t>(m) * n);
  auto inv_std = std::make_shared<std::vector<T>>(m);
  for (int i = 0; i < m; ++i) {
    T mean = T(0);
    for (int j = 0; j < n; ++j) mean += x.at(i, j);
    mean /= T(n);
    T var = T(0);
    for (int j = 0; j < n; ++j) {
      T d = x.at(i, j) - mean;
      var += d * d;
    }
    var /= T(n);
    T is = T(1) / std::sqrt(var + eps);
    (*inv_std)[i] = is;
    for (int j = 0; j < n; ++j) {
      T h = (x.at(i, j) - mean) * is;
      (*xhat)[static_cast<size_t>(i) * n + j] = h;
      out.at(i, j) = h * gamma.at(0, j) + beta.at(0, j);
    }
  }
  record_if<T>(tape, [x, gamma, beta, out, xhat, inv_std]() mutable {
    const int m = x.rows(), n = x.cols();
    T* gx = const_cast<Tensor<T>&>(x).grad();
    T* gg = const_cast<Tensor<T>&>(gamma).grad();
    T* gb = const_cast<Tensor<T>&>(beta).grad();
    const T* go = out.grad();
    for (int i = 0; i < m; ++i) {
      T sum_dy = T(0), sum_dyh = T(0);
      for (int j = 0; j < n; ++j) {
        const T h = (*xhat)[static_cast<size_t>(i) * n + j];
        const T dy = go[i * n + j] * gamma.at(0, j);
        sum_dy += dy;
        sum_dyh += dy * h;
        gg[j] += go[i * n + j] * h;
        gb[j] += go[i * n + j];
      }
      const T is = (*inv_std)[i];
      for (int j = 0; j < n; ++j) {
        const T h = (*xhat)[static_cast<size_t>(i) * n + j];
        const T dy = go[i * n + j] * gamma.at(0, j);
        gx[i * n + j] += is * (dy - sum_dy / T(n) - h * sum_dyh / T(n));
      }
    }
  });
  return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis, Tape<T>* tape) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  int rows = parts[0].rows(), cols = parts[0].cols();
  for (size_t i = 1; i < parts.size(); ++i) {
    if (axis == 0) {
      check_shape(parts[i].cols() == cols, "concat", parts[0], parts[i]);
      rows += parts[i].rows();
    } else {
      check_shape(parts[i].rows() == rows, "concat", parts[0], parts[i]);
      cols += parts[i].cols();
    }
  }
  Tensor<T> out = Tensor<T>::zeros(rows, cols);
  if (axis == 0) {
    int r0 = 0;
    for (const auto& p : parts) {
      for (int i = 0; i < p.rows(); ++i)
        for (int j = 0; j < p.cols(); ++j) out.at(r0 + i, j) = p.at(i, j);
      r0 += p.rows();
    }
  } else {
    int c0 = 0;
    for (const auto& p : parts) {
      for (int i = 0; i < p.rows(); ++i)
        for (int j = 0; j < p.cols(); ++j) out.at(i, c0 + j) = p.at(i, j);
      c0 += p.cols();
    }
  }
  record_if<T>(tape, [parts, out, axis]() mutable {
    const T* go = out.grad();
    const int n = out.cols();
    if (axis == 0) {
      int r0 = 0;
      for (const auto& p : parts) {
        T* gp = const_cast<Tensor<T>&>(p).grad();
        for (int i = 0; i < p.rows(); ++i)
          for (int j = 0; j < p.cols(); ++j)
            gp[i * p.cols() + j] += go[(r0 + i) * n + j];
        r0 += p.rows();
      }
    } else {
      int c0 = 0;
      for (const auto& p : parts) {
        T* gp = const_cast<Tensor<T>&>(p).grad();
        for (int i = 0; i < p.rows(); ++i)
          for (int j = 0; j < p.cols(); ++j)
            gp[i * p.cols() + j] += go[i * n + c0 + j];
        c0 += p.cols();
      }
    }
  });
  return out;
}

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, const std::vector<int>& ids,
                           Tape<T>* tape) {
  const int n = table.cols();
  Tensor<T> out = Tensor<T>::zeros(static_cast<int>(ids.size()), n);
  for (size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || id >= table.rows()) {
      throw ShapeError("embedding_lookup: id " + std::to_string(id) +
                       " out of range for table " + table.shape_str());
    }
    for (int j = 0; j < n; ++j) out.at(static_cast<int>(i), j) = table.at(id, j);
  }
  record_if<T>(tape, [table, ids, out]() mutable {
    T* gt = const_cast<Tensor<T>&>(table).grad();
    const T* go = out.grad();
    const int n = table.cols();
    for (size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < n; ++j) gt[ids[i] * n + j] += go[i * n + j];
  });
  return out;
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, int start, int len, Tape<T>* tape) {
  if (start < 0 || len <= 0 || start + len > x.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") out of range for " +
                     x.shape_str());
  }
  Tensor<T> out = Tensor<T>::zeros(x.rows(), len);
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < len; ++j) out.at(i, j) = x.at(i, start + j);
  record_if<T>(tape, [x, out, start, len]() mutable {
    T* gx = const_cast<Tensor<T>&>(x).grad();
    const T* go = out.grad();
    const int n = x.cols();
    for (int i = 0; i < x.rows(); ++i)
      for (int j = 0; j < len; ++j) gx[i * n + start + j] += go[i * len + j];
  });
  return out;
}

template <typename T>
Tensor<T> conv1d_same(const Tensor<T>& x, const Tensor<T>& w,
                      const Tensor<T>& bias, int kernel, Tape<T>* tape) {
  const int len = x.rows(), din = x.cols();
  check_shape(w.rows() == kernel * din, "conv1d_same", x, w);
  const int dout = w.cols();
  check_shape(bias.rows() == 1 && bias.cols() == dout, "conv1d_same", w, bias);
  const int pad = kernel / 2;
  Tensor<T> out = Tensor<T>::zeros(len, dout);
  for (int t = 0; t < len; ++t) {
    for (int j = 0; j < dout; ++j) out.at(t, j) = bias.at(0, j);
    for (int k = 0; k < kernel; ++k) {
      const int src = t + k - pad;
      if (src < 0 || src >= len) continue;
      for (int c = 0; c < din; ++c) {
        const T xv = x.at(src, c);
        if (xv == T(0)) continue;
        const T* wrow = w.data() + static_cast<size_t>(k * din + c) * dout;
        T* orow = out.data() + static_cast<size_t>(t) * dout;
        for (int j = 0; j < dout; ++j) orow[j] += xv * wrow[j];
      }
    }
  }
  record_if<T>(tape, [x, w, bias, out, kernel]() mutable {
    const int len = x.rows(), din = x.cols(), dout = w.cols();
    const int pad = kernel / 2;
    T* gx = const_cast<Tensor<T>&>(x).grad();
    T* gw = const_cast<Tensor<T>&>(w).grad();
    T* gb = const_cast<Tensor<T>&>(bias).grad();
    const T* go = out.grad();
    for (int t = 0; t < len; ++t) {
      const T* grow = go + static_cast<size_t>(t) * dout;
      for (int j = 0; j < dout; ++j) gb[j] += grow[j];
      for (int k = 0; k < kernel; ++k) {
        const int src = t + k - pad;
        if (src < 0 || src >= len) continue;
        for (int c = 0; c < din; ++c) {
          const T* wrow = w.data() + static_cast<size_t>(k * din + c) * dout;
          T* gwrow = gw + static_cast<size_t>(k * din + c) * dout;
          const T xv = x.at(src, c);
          T acc = T(0);
          for (int j = 0; j < dout; ++j) {
            acc += grow[j] * wrow[j];
            gwrow[j] += grow[j] * xv;
          }
          gx[src * din + c] += acc;
        }
      }
    }
  });
  return out;
}

template <typename T>
Tensor<T> relative_gather(const Tensor<T>& x, int clip, int len, Tape<T>* tape) {
  check_shape(x.rows() == len && x.cols() == 2 * clip + 1, "relative_gather", x,
              x);
  Tensor<T> out = Tensor<T>::zeros(len, len);
  for (int i = 0; i < len; ++i) {
    for (int j = 0; j < len; ++j) {
      int off = std::clamp(j - i, -clip, clip);
      out.at(i, j) = x.at(i, clip + off);
    }
  }
  record_if<T>(tape, [x, out, clip, len]() mutable {
    T* gx = const_cast<Tensor<T>&>(x).grad();
    const T* go = out.grad();
    const int w = 2 * clip + 1;
    for (int i = 0; i < len; ++i)
      for (int j = 0; j < len; ++j) {
        int off = std::clamp(j - i, -clip, clip);
        gx[i * w + clip + off] += go[i * len + j];
      }
  });
  return out;
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x, Tape<T>* tape) {
  T s = T(0);
  const int64_t n = x.size();
  for (int64_t i = 0; i < n; ++i) s += x.data()[i];
  Tensor<T> out = Tensor<T>::scalar(s);
  record_if<T>(tape, [x, out]() mutable {
    T* gx = const_cast<Tensor<T>&>(x).grad();
    const T g = out.grad()[0];
    const int64_t n = x.size();
    for (int64_t i = 0; i < n; ++i) gx[i] += g;
  });
  return out;
}

template <typename T>
Tensor<T> sse_loss(const Tensor<T>& pred, const Tensor<T>& target,
                   Tape<T>* tape) {
  check_shape(pred.rows() == target.rows() && pred.cols() == target.cols(),
              "sse_loss", pred, target);
  T s = T(0);
  const int64_t n = pred.size();
  for (int64_t i = 0; i < n; ++i) {
    const T d = pred.data()[i] - target.data()[i];
    s += d * d;
  }
  Tensor<T> out = Tensor<T>::scalar(s);
  record_if<T>(tape, [pred, target, out]() mutable {
    T* gp = const_cast<Tensor<T>&>(pred).grad();
    T* gt = const_cast<Tensor<T>&>(target).grad();
    const T g = out.grad()[0];
    const int64_t n = pred.size();
    for (int64_t i = 0; i < n; ++i) {
      const T d = T(2) * (pred.data()[i] - target.data()[i]) * g;
      gp[i] += d;
      gt[i] -= d;
    }
  });
  return out;
}

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target,
                   Tape<T>* tape) {
  Tensor<T> s = sse_loss(pred, target, tape);
  return scale(s, T(1) / static_cast<T>(pred.size()), tape);
}

template <typename T>
Tensor<T> hard_onehot_st(const Tensor<T>& x, Tape<T>* tape) {
  if (x.rows() != 1) {
    throw ShapeError("hard_onehot_st: expected a single row, got " +
                     x.shape_str());
  }
  Tensor<T> out = Tensor<T>::one_hot(x.cols(), argmax_row(x));
  record_if<T>(tape, [x, out]() mutable {
    T* gx = const_cast<Tensor<T>&>(x).grad();
    const T* go = out.grad();
    for (int j = 0; j < x.cols(); ++j) gx[j] += go[j];
  });
  return out;
}

template <typename T>
int argmax_row(const Tensor<T>& x, int row) {
  int best = 0;
  for (int j = 1; j < x.cols(); ++j)
    if (x.at(row, j) > x.at(row, best)) best = j;
  return best;
}

#define DICTG2P_INSTANTIATE(T)                                                 \
  template class Tensor<T>;                                                    \
  template class Tape<T>;                                                      \
  template void check_shape<T>(bool, const std::string&, const Tensor<T>&,     \
                               const Tensor<T>&);                              \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&, Tape<T>*);  \
  template Tensor<T> transpose<T>(const Tensor<T>&, Tape<T>*);                 \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&, Tape<T>*);     \
  template Tensor<T> add_bias<T>(const Tensor<T>&, const Tensor<T>&,           \
                                 Tape<T>*);                                    \
  template Tensor<T> scale<T>(const Tensor<T>&, T, Tape<T>*);                  \
  template Tensor<T> relu<T>(const Tensor<T>&, Tape<T>*);                      \
  template Tensor<T> log<T>(const Tensor<T>&, Tape<T>*);                       \
  template Tensor<T> clamp_min<T>(const Tensor<T>&, T, Tape<T>*);              \
  template Tensor<T> softmax_lastdim<T>(const Tensor<T>&, Tape<T>*);           \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&,         \
                                   const Tensor<T>&, T, Tape<T>*);             \
  template Tensor<T> concat<T>(const std::vector<Tensor<T>>&, int, Tape<T>*);  \
  template Tensor<T> embedding_lookup<T>(const Tensor<T>&,                     \
                                         const std::vector<int>&, Tape<T>*);   \
  template Tensor<T> slice_cols<T>(const Tensor<T>&, int, int, Tape<T>*);      \
  template Tensor<T> conv1d_same<T>(const Tensor<T>&, const Tensor<T>&,        \
                                    const Tensor<T>&, int, Tape<T>*);          \
  template Tensor<T> relative_gather<T>(const Tensor<T>&, int, int, Tape<T>*); \
  template Tensor<T> sum_all<T>(const Tensor<T>&, Tape<T>*);                   \
  template Tensor<T> mse_loss<T>(const Tensor<T>&, const Tensor<T>&,           \
                                 Tape<T>*);                                    \
  template Tensor<T> sse_loss<T>(const Tensor<T>&, const Tensor<T>&,           \
                                 Tape<T>*);                                    \
  template Tensor<T> hard_onehot_st<T>(const Tensor<T>&, Tape<T>*);            \
  template int argmax_row<T>(const Tensor<T>&, int);

DICTG2P_INSTANTIATE(float)
DICTG2P_INSTANTIATE(double)

#undef DICTG2P_INSTANTIATE

}  // namespace dictg2p
