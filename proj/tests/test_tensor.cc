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

#include "dictg2p/tensor.h"
#include "test_util.h"

using namespace dictg2p;
using dictg2p::testing::gradcheck;
using dictg2p::testing::random_tensor;

TEST_CASE("softmax of a constant row is uniform") {
  auto x = Tensor<double>::from_data(1, 3, {0.0, 0.0, 0.0});
  auto y = softmax_lastdim(x, static_cast<Tape<double>*>(nullptr));
  for (int j = 0; j < 3; ++j) CHECK(y.at(0, j) == doctest::Approx(1.0 / 3));
}

TEST_CASE("softmax rows are non-negative and sum to one") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_tensor(4, 7, rng, 3.0);
    auto y = softmax_lastdim(x, static_cast<Tape<double>*>(nullptr));
    for (int i = 0; i < y.rows(); ++i) {
      double sum = 0;
      for (int j = 0; j < y.cols(); ++j) {
        CHECK(y.at(i, j) >= 0.0);
        sum += y.at(i, j);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("matmul against identity") {
  auto eye = Tensor<double>::from_data(2, 2, {1, 0, 0, 1});
  auto a = Tensor<double>::from_data(2, 3, {1, 2, 3, 4, 5, 6});
  auto out = matmul(eye, a, static_cast<Tape<double>*>(nullptr));
  CHECK(out.same_values(a));
}

TEST_CASE("matmul shape mismatch reports both shapes") {
  auto a = Tensor<double>::zeros(2, 3);
  auto b = Tensor<double>::zeros(2, 3);
  CHECK_THROWS_WITH_AS(matmul(a, b, static_cast<Tape<double>*>(nullptr)),
                       doctest::Contains("[2, 3]"), ShapeError);
}

TEST_CASE("backward of sum gives all-ones gradient") {
  auto x = Tensor<double>::from_data(2, 3, {1, -2, 3, 0.5, 4, -1}, true);
  Tape<double> tape;
  auto loss = sum_all(x, &tape);
  tape.backward(loss);
  for (int64_t i = 0; i < x.size(); ++i) CHECK(x.grad()[i] == 1.0);
}

TEST_CASE("mse of a tensor with itself has zero loss and gradient") {
  auto x = Tensor<double>::from_data(2, 2, {1, 2, 3, 4}, true);
  Tape<double> tape;
  auto loss = mse_loss(x, x, &tape);
  CHECK(loss.data()[0] == 0.0);
  tape.backward(loss);
  for (int64_t i = 0; i < x.size(); ++i) CHECK(x.grad()[i] == 0.0);
}

TEST_CASE("mse against a shifted copy is the squared shift") {
  auto a = Tensor<double>::from_data(2, 3, {1, 2, 3, 4, 5, 6});
  auto b = Tensor<double>::from_data(2, 3, {2, 3, 4, 5, 6, 7});
  auto loss = mse_loss(a, b, static_cast<Tape<double>*>(nullptr));
  CHECK(loss.data()[0] == doctest::Approx(1.0));
}

TEST_CASE("backward twice without a new forward is an error") {
  auto x = Tensor<double>::from_data(1, 2, {1, 2}, true);
  Tape<double> tape;
  auto loss = sum_all(x, &tape);
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), Error);
}

TEST_CASE("backward requires a scalar loss") {
  auto x = Tensor<double>::from_data(1, 2, {1, 2}, true);
  Tape<double> tape;
  auto y = relu(x, &tape);
  CHECK_THROWS_AS(tape.backward(y), ShapeError);
}

TEST_CASE("layer_norm gradient matches finite differences on a 3x5 input") {
  Rng rng(7);
  auto x = random_tensor(3, 5, rng);
  auto gamma = random_tensor(1, 5, rng, 0.5);
  auto beta = random_tensor(1, 5, rng, 0.5);
  auto probe = random_tensor(1, 5, rng, 1.0, false);
  double err = gradcheck({x, gamma, beta}, [&](Tape<double>* tape) {
    auto y = layer_norm(x, gamma, beta, 1e-5, tape);
    // Project onto a fixed random direction so every output matters.
    return sum_all(matmul(y, transpose(probe, tape), tape), tape);
  });
  CHECK(err < 1e-5);
}

TEST_CASE("every differentiable op passes a finite-difference check") {
  // Weighted sums make the loss sensitive to each output element.
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    {  // matmul
      auto a = random_tensor(3, 4, rng);
      auto b = random_tensor(4, 2, rng);
      double err = gradcheck({a, b}, [&](Tape<double>* tape) {
        return sum_all(matmul(a, b, tape), tape);
      });
      CHECK(err < 1e-5);
    }
    {  // transpose + add + scale
      auto a = random_tensor(2, 5, rng);
      auto b = random_tensor(5, 2, rng);
      double err = gradcheck({a, b}, [&](Tape<double>* tape) {
        auto t = transpose(a, tape);
        return sum_all(scale(add(t, b, tape), 1.7, tape), tape);
      });
      CHECK(err < 1e-5);
    }
    {  // add_bias
      auto x = random_tensor(3, 4, rng);
      auto bias = random_tensor(1, 4, rng);
      double err = gradcheck({x, bias}, [&](Tape<double>* tape) {
        return sum_all(add_bias(x, bias, tape), tape);
      });
      CHECK(err < 1e-5);
    }
    {  // relu away from the kink
      auto x = random_tensor(3, 4, rng, 2.0);
      for (int64_t i = 0; i < x.size(); ++i)
        if (std::fabs(x.data()[i]) < 1e-2) x.data()[i] = 0.3;
      double err = gradcheck({x}, [&](Tape<double>* tape) {
        return sum_all(relu(x, tape), tape);
      });
      CHECK(err < 1e-5);
    }
    {  // softmax + log + clamp (positive inputs away from the clamp)
      auto x = random_tensor(2, 5, rng);
      double err = gradcheck({x}, [&](Tape<double>* tape) {
        auto sm = softmax_lastdim(x, tape);
        auto lg = log(clamp_min(sm, 1e-10, tape), tape);
        return mse_loss(lg, Tensor<double>::zeros(2, 5), tape);
      });
      CHECK(err < 1e-5);
    }
    {  // concat both axes + slice_cols
      auto a = random_tensor(2, 3, rng);
      auto b = random_tensor(2, 3, rng);
      auto c = random_tensor(4, 2, rng);
      double err = gradcheck({a, b, c}, [&](Tape<double>* tape) {
        auto rows = concat<double>({a, b}, 0, tape);       // 4 x 3
        auto cols = concat<double>({rows, c}, 1, tape);    // 4 x 5
        auto piece = slice_cols(cols, 1, 3, tape);         // 4 x 3
        return sum_all(scale(piece, 0.5, tape), tape);
      });
      CHECK(err < 1e-5);
    }
    {  // embedding_lookup with a repeated id (gradient accumulation)
      auto table = random_tensor(5, 3, rng);
      std::vector<int> ids = {1, 3, 1, 0};
      double err = gradcheck({table}, [&](Tape<double>* tape) {
        return sum_all(embedding_lookup(table, ids, tape), tape);
      });
      CHECK(err < 1e-5);
    }
    {  // conv1d_same
      auto x = random_tensor(6, 3, rng);
      auto w = random_tensor(5 * 3, 4, rng, 0.4);
      auto bias = random_tensor(1, 4, rng);
      double err = gradcheck({x, w, bias}, [&](Tape<double>* tape) {
        return mse_loss(conv1d_same(x, w, bias, 5, tape),
                        Tensor<double>::zeros(6, 4), tape);
      });
      CHECK(err < 1e-5);
    }
    {  // relative_gather
      const int clip = 2, len = 5;
      auto x = random_tensor(len, 2 * clip + 1, rng);
      double err = gradcheck({x}, [&](Tape<double>* tape) {
        return mse_loss(relative_gather(x, clip, len, tape),
                        Tensor<double>::zeros(len, len), tape);
      });
      CHECK(err < 1e-5);
    }
    {  // sse_loss both sides
      auto a = random_tensor(3, 3, rng);
      auto b = random_tensor(3, 3, rng);
      double err = gradcheck({a, b}, [&](Tape<double>* tape) {
        return sse_loss(a, b, tape);
      });
      CHECK(err < 1e-5);
    }
  }
}

TEST_CASE("straight-through hard one-hot passes gradients unchanged") {
  auto x = Tensor<double>::from_data(1, 3, {0.2, 0.5, 0.3}, true);
  Tape<double> tape;
  auto y = hard_onehot_st(x, &tape);
  CHECK(y.at(0, 1) == 1.0);
  CHECK(y.at(0, 0) == 0.0);
  auto loss = sum_all(scale(y, 2.0, &tape), &tape);
  tape.backward(loss);
  for (int j = 0; j < 3; ++j) CHECK(x.grad()[j] == 2.0);
}

TEST_CASE("float32 gradients stay within the loose tolerance") {
  Rng rng(3);
  // A small composite graph in float: matmul -> relu -> mse.
  std::vector<float> av, bv;
  for (int i = 0; i < 12; ++i) av.push_back(static_cast<float>(rng.normal()));
  for (int i = 0; i < 8; ++i) bv.push_back(static_cast<float>(rng.normal()));
  auto a = Tensor<float>::from_data(3, 4, av, true);
  auto b = Tensor<float>::from_data(4, 2, bv, true);
  Tape<float> tape;
  auto loss = mse_loss(matmul(a, b, &tape), Tensor<float>::zeros(3, 2), &tape);
  tape.backward(loss);
  const float h = 1e-2f;
  double max_rel = 0;
  for (int64_t i = 0; i < a.size(); ++i) {
    const float saved = a.data()[i];
    a.data()[i] = saved + h;
    auto up = mse_loss(matmul(a, b, static_cast<Tape<float>*>(nullptr)),
                       Tensor<float>::zeros(3, 2),
                       static_cast<Tape<float>*>(nullptr));
    a.data()[i] = saved - h;
    auto down = mse_loss(matmul(a, b, static_cast<Tape<float>*>(nullptr)),
                         Tensor<float>::zeros(3, 2),
                         static_cast<Tape<float>*>(nullptr));
    a.data()[i] = saved;
    const double fd = (up.data()[0] - down.data()[0]) / (2.0 * h);
    const double ad = a.grad()[i];
    max_rel = std::max(max_rel, std::fabs(ad - fd) /
                                    std::max({std::fabs(ad), std::fabs(fd),
                                              1e-3}));
  }
  CHECK(max_rel < 1e-3);
}

TEST_CASE("identical seeds give bit-identical forward and backward") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    auto a = random_tensor(4, 4, rng);
    auto b = random_tensor(4, 4, rng);
    Tape<double> tape;
    auto y = softmax_lastdim(matmul(a, relu(b, &tape), &tape), &tape);
    auto loss = mse_loss(y, Tensor<double>::zeros(4, 4), &tape);
    tape.backward(loss);
    std::vector<double> out(a.grad(), a.grad() + a.size());
    out.push_back(loss.data()[0]);
    return out;
  };
  CHECK(run(42) == run(42));
}
