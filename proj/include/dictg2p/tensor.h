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

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dictg2p/error.h"

namespace dictg2p {

// Dense row-major 2-D tensor with shared storage. Copies are shallow; the
// tape records backward closures that write into the shared grad buffers.
// Scalars are 1x1, row vectors 1xN. T is float or double, chosen per run.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor full(int rows, int cols, T value, bool requires_grad = false);
  static Tensor from_data(int rows, int cols, std::vector<T> values,
                          bool requires_grad = false);
  static Tensor scalar(T value);
  static Tensor one_hot(int size, int index);  // 1 x size

  bool defined() const { return s_ != nullptr; }
  int rows() const { return s_->rows; }
  int cols() const { return s_->cols; }
  int64_t size() const { return static_cast<int64_t>(s_->rows) * s_->cols; }
  std::vector<int> shape() const { return {s_->rows, s_->cols}; }
  std::string shape_str() const;

  T* data() { return s_->value.data(); }
  const T* data() const { return s_->value.data(); }
  T& at(int r, int c) { return s_->value[static_cast<size_t>(r) * s_->cols + c]; }
  T at(int r, int c) const {
    return s_->value[static_cast<size_t>(r) * s_->cols + c];
  }
  const std::vector<T>& values() const { return s_->value; }

  bool requires_grad() const { return s_->requires_grad; }
  void set_requires_grad(bool b) { s_->requires_grad = b; }

  // Gradient buffer, allocated (zeroed) on first access.
  T* grad() {
    ensure_grad();
    return s_->grad.data();
  }
  const std::vector<T>& grad_values() const { return s_->grad; }
  bool has_grad() const { return !s_->grad.empty(); }
  void ensure_grad() {
    if (s_->grad.empty()) s_->grad.assign(s_->value.size(), T(0));
  }
  void zero_grad() {
    if (!s_->grad.empty()) s_->grad.assign(s_->value.size(), T(0));
  }

  // Identity of the underlying storage (for aliasing checks in tests).
  const void* storage_id() const { return s_.get(); }

  bool same_values(const Tensor& other) const;
  bool all_finite() const;

 private:
  struct Storage {
    int rows = 0;
    int cols = 0;
    std::vector<T> value;
    std::vector<T> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> s_;
};

// Reverse-mode record. Ops append one closure per executed op; backward()
// replays them once in reverse and then clears the tape.
template <typename T>
class Tape {
 public:
  void record(std::function<void()> fn) {
    records_.push_back(std::move(fn));
    consumed_ = false;
  }
  size_t size() const { return records_.size(); }
  void clear() {
    records_.clear();
    consumed_ = false;
  }

  // loss must be scalar (1x1). Seeds d(loss)/d(loss) = 1, runs every record
  // exactly once in reverse order, then clears. Calling again without new
  // forward ops is an error.
  void backward(Tensor<T>& loss);

 private:
  std::vector<std::function<void()>> records_;
  bool consumed_ = false;
};

// --- Differentiable ops. A null tape runs forward-only. ---

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape);

template <typename T>
Tensor<T> transpose(const Tensor<T>& a, Tape<T>* tape);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape);

// Adds a 1 x cols bias row to every row of x.
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias, Tape<T>* tape);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor, Tape<T>* tape);

template <typename T>
Tensor<T> relu(const Tensor<T>& x, Tape<T>* tape);

// Natural log; inputs must be positive (clamp first for safety).
template <typename T>
Tensor<T> log(const Tensor<T>& x, Tape<T>* tape);

template <typename T>
Tensor<T> clamp_min(const Tensor<T>& x, T min_value, Tape<T>* tape);

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x, Tape<T>* tape);

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps, Tape<T>* tape);

// axis 0 stacks rows, axis 1 concatenates columns.
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis, Tape<T>* tape);

// Gathers rows of table by id; backward scatter-adds into the table.
// Doubles as the row-picking op (table = any matrix, ids = row indices).
template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, const std::vector<int>& ids,
                           Tape<T>* tape);

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, int start, int len, Tape<T>* tape);

// Same-padded 1-D convolution over the row (time) axis.
// x: len x d_in, w: (kernel * d_in) x d_out, bias: 1 x d_out.
template <typename T>
Tensor<T> conv1d_same(const Tensor<T>& x, const Tensor<T>& w,
                      const Tensor<T>& bias, int kernel, Tape<T>* tape);

// Expands per-offset scores into pairwise position scores:
// out[i][j] = in[i][clip + clamp(j - i, -clip, clip)], out is len x len.
template <typename T>
Tensor<T> relative_gather(const Tensor<T>& x, int clip, int len, Tape<T>* tape);

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x, Tape<T>* tape);  // 1x1

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target,
                   Tape<T>* tape);  // 1x1, mean over all elements

template <typename T>
Tensor<T> sse_loss(const Tensor<T>& pred, const Tensor<T>& target,
                   Tape<T>* tape);  // 1x1, sum of squared errors

// Straight-through hard one-hot: forward emits one_hot(argmax(x)) for the
// single row x, backward passes gradients through unchanged.
template <typename T>
Tensor<T> hard_onehot_st(const Tensor<T>& x, Tape<T>* tape);

// --- Non-differentiable helpers ---

template <typename T>
int argmax_row(const Tensor<T>& x, int row = 0);

template <typename T>
void check_shape(bool ok, const std::string& op, const Tensor<T>& a,
                 const Tensor<T>& b);

}  // namespace dictg2p
