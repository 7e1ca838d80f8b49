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

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "dictg2p/rng.h"
#include "dictg2p/tensor.h"

namespace dictg2p::testing {

inline Tensor<double> random_tensor(int rows, int cols, Rng& rng,
                                    double scale = 1.0,
                                    bool requires_grad = true) {
  std::vector<double> values(static_cast<size_t>(rows) * cols);
  for (double& v : values) v = rng.normal() * scale;
  return Tensor<double>::from_data(rows, cols, std::move(values),
                                   requires_grad);
}

// Central finite-difference gradient check. `forward` must rebuild the graph
// from the leaves' current values; it receives a tape (or nullptr for the
// perturbed value-only evaluations). Returns the max relative error over all
// leaf elements, with rel = |ad - fd| / max(|ad|, |fd|, 1e-6).
inline double gradcheck(std::vector<Tensor<double>> leaves,
                        std::function<Tensor<double>(Tape<double>*)> forward,
                        double h = 1e-4) {
  for (auto& leaf : leaves) leaf.zero_grad();
  Tape<double> tape;
  Tensor<double> loss = forward(&tape);
  tape.backward(loss);
  std::vector<std::vector<double>> analytic;
  for (auto& leaf : leaves) {
    leaf.ensure_grad();
    analytic.push_back(leaf.grad_values());
  }
  double max_rel = 0.0;
  for (size_t li = 0; li < leaves.size(); ++li) {
    Tensor<double>& leaf = leaves[li];
    for (int64_t i = 0; i < leaf.size(); ++i) {
      const double saved = leaf.data()[i];
      leaf.data()[i] = saved + h;
      const double up = forward(nullptr).data()[0];
      leaf.data()[i] = saved - h;
      const double down = forward(nullptr).data()[0];
      leaf.data()[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double ad = analytic[li][i];
      const double denom =
          std::max({std::fabs(ad), std::fabs(fd), 1e-6});
      max_rel = std::max(max_rel, std::fabs(ad - fd) / denom);
    }
  }
  for (auto& leaf : leaves) leaf.zero_grad();
  return max_rel;
}

inline bool near(double a, double b, double tol) {
  return std::fabs(a - b) <= tol;
}

}  // namespace dictg2p::testing
