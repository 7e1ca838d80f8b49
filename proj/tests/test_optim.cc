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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dictg2p/optim.h"
#include "dictg2p/tensor.h"

using namespace dictg2p;

namespace {

// Minimizes f(w) = sum(w^2) for `steps` Adam updates and returns |w|_inf.
double descend_quadratic(double w0, int steps, double lr) {
  ParameterStore<double> params;
  Tensor<double>& w = params.create("w", 1, 1);
  w.data()[0] = w0;
  AdamState<double> state = AdamState<double>::init(params);
  for (int s = 0; s < steps; ++s) {
    params.zero_grads();
    Tape<double> tape;
    Tensor<double> loss = mse_loss(params.get("w"), Tensor<double>::zeros(1, 1),
                                   &tape);
    tape.backward(loss);
    adam_step(params, state, lr);
  }
  return std::fabs(params.get("w").data()[0]);
}

}  // namespace

TEST_CASE("adam leaves parameters unchanged for zero gradients") {
  ParameterStore<double> params;
  params.create("w", 2, 2) = Tensor<double>::from_data(2, 2, {1, 2, 3, 4}, true);
  AdamState<double> state = AdamState<double>::init(params);
  params.zero_grads();
  params.get("w").ensure_grad();
  adam_step(params, state, 0.1);
  CHECK(params.get("w").same_values(
      Tensor<double>::from_data(2, 2, {1, 2, 3, 4})));
}

TEST_CASE("one adam step on w^2 moves w toward zero") {
  const double after = descend_quadratic(1.0, 1, 0.1);
  CHECK(after < 1.0);
}

TEST_CASE("200 adam steps on a convex quadratic reach |w| < 1e-2") {
  CHECK(descend_quadratic(1.0, 200, 0.1) < 1e-2);
}

TEST_CASE("adam rejects non-finite gradients") {
  ParameterStore<double> params;
  params.create("w", 1, 1);
  AdamState<double> state = AdamState<double>::init(params);
  params.get("w").grad()[0] = std::nan("");
  CHECK_THROWS_AS(adam_step(params, state, 0.1), DivergenceError);
}

TEST_CASE("noam peak value and shape") {
  const int64_t warmup = 400;
  const int d_model = 64;
  const double peak = noam_lr(warmup, warmup, d_model);
  CHECK(peak == doctest::Approx(std::pow(64.0, -0.5) * std::pow(400.0, -0.5)));
  for (int64_t s = 1; s <= 10 * warmup; s += 7) {
    CHECK(noam_lr(s, warmup, d_model) <= peak + 1e-15);
  }
  // Direct formula evaluation at twice the warmup.
  const double ratio = noam_lr(2 * warmup, warmup, d_model) / peak;
  CHECK(std::fabs(ratio - std::pow(2.0, -0.5)) < 1e-9);
}

TEST_CASE("tau schedule start, floor, and monotonicity") {
  TauSchedule sched;  // tau0=1.0, tau_min=0.1, rate=1e-5, every=1000
  CHECK(sched.at(0) == 1.0);
  CHECK(sched.at(100000000) == doctest::Approx(0.1));
  double prev = sched.at(0);
  for (int64_t s = 0; s <= 500000; s += 777) {
    const double cur = sched.at(s);
    CHECK(cur <= prev + 1e-15);
    CHECK(cur >= 0.1);
    prev = cur;
  }
  // Held constant between update boundaries.
  CHECK(sched.at(1) == sched.at(999));
  CHECK(sched.at(1000) < sched.at(999));
}

TEST_CASE("determinism: 100 optimizer steps are bit-identical across runs") {
  auto run = []() {
    Rng rng(5);
    ParameterStore<double> params;
    init_xavier(params.create("w", 3, 3), 3, 3, rng);
    init_normal(params.create("b", 1, 3), 0.1, rng);
    AdamState<double> state = AdamState<double>::init(params);
    auto target = Tensor<double>::from_data(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    for (int s = 1; s <= 100; ++s) {
      params.zero_grads();
      Tape<double> tape;
      auto pred = add_bias(params.get("w"), params.get("b"), &tape);
      auto loss = mse_loss(pred, target, &tape);
      tape.backward(loss);
      adam_step(params, state, 0.01 * noam_lr(s, 50, 8));
    }
    std::vector<double> out;
    for (size_t i = 0; i < params.count(); ++i) {
      const auto& v = params.tensor(i).values();
      out.insert(out.end(), v.begin(), v.end());
    }
    return out;
  };
  CHECK(run() == run());
}
