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

#include "dictg2p/optim.h"

#include <cmath>

#include "dictg2p/error.h"

namespace dictg2p {

template <typename T>
Tensor<T>& ParameterStore<T>::create(const std::string& name, int rows,
                                     int cols) {
  if (index_.count(name) > 0) {
    throw Error("parameter already exists: " + name);
  }
  index_[name] = params_.size();
  params_.emplace_back(name, Tensor<T>::zeros(rows, cols, true));
  return params_.back().second;
}

template <typename T>
Tensor<T>& ParameterStore<T>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("no such parameter: " + name);
  return params_[it->second].second;
}

template <typename T>
const Tensor<T>& ParameterStore<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("no such parameter: " + name);
  return params_[it->second].second;
}

template <typename T>
void ParameterStore<T>::zero_grads() {
  for (auto& [name, t] : params_) t.zero_grad();
}

template <typename T>
int64_t ParameterStore<T>::total_elements() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

template <typename T>
AdamState<T> AdamState<T>::init(const ParameterStore<T>& params) {
  AdamState<T> st;
  st.m.resize(params.count());
  st.v.resize(params.count());
  for (size_t i = 0; i < params.count(); ++i) {
    st.m[i].assign(params.tensor(i).size(), T(0));
    st.v[i].assign(params.tensor(i).size(), T(0));
  }
  return st;
}

template <typename T>
void adam_step(ParameterStore<T>& params, AdamState<T>& state, double lr) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.count(); ++i) {
    Tensor<T>& p = params.tensor(i);
    p.ensure_grad();
    T* w = p.data();
    const T* g = p.grad();
    std::vector<T>& m = state.m[i];
    std::vector<T>& v = state.v[i];
    const int64_t n = p.size();
    for (int64_t k = 0; k < n; ++k) {
      const double gk = static_cast<double>(g[k]);
      if (!std::isfinite(gk)) {
        throw DivergenceError("non-finite gradient in parameter " +
                              params.name(i));
      }
      const double mk = state.beta1 * static_cast<double>(m[k]) +
                        (1.0 - state.beta1) * gk;
      const double vk = state.beta2 * static_cast<double>(v[k]) +
                        (1.0 - state.beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double mhat = mk / bc1;
      const double vhat = vk / bc2;
      w[k] = static_cast<T>(static_cast<double>(w[k]) -
                            lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

double noam_lr(int64_t step, int64_t warmup, int d_model) {
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return std::pow(static_cast<double>(d_model), -0.5) *
         std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

double TauSchedule::at(int64_t step) const {
  const int64_t held = (step / update_every) * update_every;
  const double tau = tau0 * std::exp(-rate * static_cast<double>(held));
  return tau > tau_min ? tau : tau_min;
}

template <typename T>
void init_xavier(Tensor<T>& w, int fan_in, int fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (int64_t i = 0; i < w.size(); ++i)
    w.data()[i] = static_cast<T>(rng.uniform(-a, a));
}

template <typename T>
void init_normal(Tensor<T>& w, double stddev, Rng& rng) {
  for (int64_t i = 0; i < w.size(); ++i)
    w.data()[i] = static_cast<T>(rng.normal(0.0, stddev));
}

#define DICTG2P_INSTANTIATE(T)                                            \
  template class ParameterStore<T>;                                      \
  template struct AdamState<T>;                                          \
  template void adam_step<T>(ParameterStore<T>&, AdamState<T>&, double); \
  template void init_xavier<T>(Tensor<T>&, int, int, Rng&);              \
  template void init_normal<T>(Tensor<T>&, double, Rng&);

DICTG2P_INSTANTIATE(float)
DICTG2P_INSTANTIATE(double)

#undef DICTG2P_INSTANTIATE

}  // namespace dictg2p
