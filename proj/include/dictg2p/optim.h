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

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dictg2p/rng.h"
#include "dictg2p/tensor.h"

namespace dictg2p {

// Named trainable tensors in deterministic creation order. Checkpoints and
// the optimizer iterate in this order.
template <typename T>
class ParameterStore {
 public:
  Tensor<T>& create(const std::string& name, int rows, int cols);
  Tensor<T>& get(const std::string& name);
  const Tensor<T>& get(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  size_t count() const { return params_.size(); }
  const std::string& name(size_t i) const { return params_[i].first; }
  Tensor<T>& tensor(size_t i) { return params_[i].second; }
  const Tensor<T>& tensor(size_t i) const { return params_[i].second; }

  void zero_grads();
  int64_t total_elements() const;

 private:
  std::vector<std::pair<std::string, Tensor<T>>> params_;
  std::unordered_map<std::string, size_t> index_;
};

// Adam moments, one pair of accumulators per parameter, plus the shared step
// counter. Defaults follow the training setup: beta1=0.9, beta2=0.98,
// eps=1e-9.
template <typename T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  int64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  static AdamState init(const ParameterStore<T>& params);
};

// One Adam update with bias correction over every parameter in the store.
// Throws DivergenceError on a non-finite gradient.
template <typename T>
void adam_step(ParameterStore<T>& params, AdamState<T>& state, double lr);

// Transformer learning-rate schedule:
// d_model^-0.5 * min(step^-0.5, step * warmup^-1.5); peak at step == warmup.
double noam_lr(int64_t step, int64_t warmup, int d_model);

// Exponential temperature annealing, stepped every `update_every` steps:
// tau(s) = max(tau_min, tau0 * exp(-rate * floor(s / every) * every)).
struct TauSchedule {
  double tau0 = 1.0;
  double tau_min = 0.1;
  double rate = 1e-5;
  int64_t update_every = 1000;

  double at(int64_t step) const;
};

inline double anneal_tau(int64_t step, const TauSchedule& schedule = {}) {
  return schedule.at(step);
}

// Xavier-uniform / scaled-normal initializers used across the model.
template <typename T>
void init_xavier(Tensor<T>& w, int fan_in, int fan_out, Rng& rng);
template <typename T>
void init_normal(Tensor<T>& w, double stddev, Rng& rng);

}  // namespace dictg2p
