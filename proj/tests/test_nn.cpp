// SPDX-License-Identifier: Apache-2.0
//
// coperc: multi-UAV cooperative perception link and policy simulator
// Copyright (C) 2026 The coperc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "coperc/common.hpp"
#include "coperc/nn.hpp"

using namespace coperc;

namespace {

Vector random_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = g(rng);
  return v;
}

// 0.5 ||f(x) - y||^2
double loss(const Mlp& net, const Vector& x, const Vector& y) {
  return 0.5 * (net.forward(x) - y).squaredNorm();
}

}  // namespace

TEST(Mlp, ShapesAndParameterCount) {
  Rng rng(1);
  const Mlp net({5, 7, 3, 2}, rng);
  EXPECT_EQ(net.inputs(), 5u);
  EXPECT_EQ(net.outputs(), 2u);
  EXPECT_EQ(net.layers(), 3u);
  EXPECT_EQ(net.parameter_count(), 5u * 7 + 7 + 7 * 3 + 3 + 3 * 2 + 2);
  EXPECT_EQ(net.flat_parameters().size(), net.parameter_count());
}

TEST(Mlp, ZeroWeightsOutputBias) {
  Rng rng(2);
  Mlp net({3, 4, 2}, rng);
  for (auto& w : net.weights()) w.setZero();
  net.biases().back() << 0.25, -1.5;
  const Vector out = net.forward(random_vector(3, rng));
  EXPECT_EQ(out(0), 0.25);
  EXPECT_EQ(out(1), -1.5);
}

TEST(Mlp, ForwardIsDeterministic) {
  Rng a(3), b(3);
  const Mlp n1({4, 8, 8, 3}, a);
  const Mlp n2({4, 8, 8, 3}, b);
  EXPECT_EQ(n1, n2);
  Rng rng(4);
  const Vector x = random_vector(4, rng);
  Mlp::Tape tape;
  EXPECT_EQ(n1.forward(x), n2.forward(x, tape));
  EXPECT_EQ(tape.activations.size(), n1.layers() + 1);
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Rng rng(5);
  Mlp net({4, 6, 5, 3}, rng);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector x = random_vector(4, rng);
    const Vector y = random_vector(3, rng);
    Mlp::Tape tape;
    const Vector out = net.forward(x, tape);
    MlpGradients grads = net.zero_gradients();
    const Vector dx = net.backward(tape, out - y, grads);

    // Parameter gradients.
    std::vector<double> analytic;
    for (std::size_t l = 0; l < net.layers(); ++l) {
      const Matrix& w = grads.weights[l];
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        for (Eigen::Index r = 0; r < w.rows(); ++r) analytic.push_back(w(r, c));
      }
      for (Eigen::Index r = 0; r < grads.biases[l].size(); ++r) {
        analytic.push_back(grads.biases[l](r));
      }
    }
    const std::vector<double> theta = net.flat_parameters();
    ASSERT_EQ(analytic.size(), theta.size());
    const double h = 1e-6;
    for (std::size_t p = 0; p < theta.size(); ++p) {
      auto plus = theta, minus = theta;
      plus[p] += h;
      minus[p] -= h;
      Mlp a = net, b = net;
      a.set_flat_parameters(plus);
      b.set_flat_parameters(minus);
      const double numeric = (loss(a, x, y) - loss(b, x, y)) / (2.0 * h);
      EXPECT_NEAR(analytic[p], numeric,
                  1e-5 * std::max(1.0, std::abs(numeric)))
          << "parameter " << p;
    }
    // Input gradient.
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      Vector xp = x, xm = x;
      xp(k) += h;
      xm(k) -= h;
      const double numeric = (loss(net, xp, y) - loss(net, xm, y)) / (2.0 * h);
      EXPECT_NEAR(dx(k), numeric, 1e-5 * std::max(1.0, std::abs(numeric)));
    }
  }
}

TEST(Mlp, FlatParametersRoundTrip) {
  Rng rng(6);
  Mlp net({3, 5, 2}, rng);
  auto theta = net.flat_parameters();
  for (auto& v : theta) v *= 2.0;
  net.set_flat_parameters(theta);
  EXPECT_EQ(net.flat_parameters(), theta);
  theta.pop_back();
  EXPECT_THROW(net.set_flat_parameters(theta), ShapeError);
}

TEST(Mlp, JsonRoundTripIsExact) {
  Rng rng(7);
  const Mlp net({6, 9, 4}, rng);
  const Mlp back = mlp_from_json(nlohmann::json::parse(mlp_to_json(net).dump()));
  EXPECT_EQ(back, net);
  const Vector x = random_vector(6, rng);
  EXPECT_EQ(back.forward(x), net.forward(x));
}

TEST(MomentumSgd, FirstStepIsPlainGradientStep) {
  Rng rng(8);
  Mlp net({2, 3, 1}, rng);
  const auto before = net.flat_parameters();
  MomentumSgd opt(net, 0.1, 0.9);
  MlpGradients g = net.zero_gradients();
  for (auto& w : g.weights) w.setConstant(1.0);
  for (auto& b : g.biases) b.setConstant(1.0);
  opt.step(net, g);
  const auto after = net.flat_parameters();
  for (std::size_t p = 0; p < after.size(); ++p) {
    EXPECT_NEAR(after[p], before[p] - 0.1, 1e-15);
  }
  // Second step: v = 0.9 * (-0.1) - 0.1.
  opt.step(net, g);
  const auto again = net.flat_parameters();
  for (std::size_t p = 0; p < again.size(); ++p) {
    EXPECT_NEAR(again[p], before[p] - 0.1 - 0.19, 1e-14);
  }
}

TEST(MomentumSgd, FitsLinearTarget) {
  Rng rng(9);
  Mlp net({2, 8, 1}, rng);
  MomentumSgd opt(net, 0.02, 0.9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::pair<Vector, Vector>> data;
  for (int n = 0; n < 32; ++n) {
    Vector x(2);
    x << u(rng), u(rng);
    Vector y(1);
    y << 0.5 * x(0) - 0.3 * x(1);
    data.emplace_back(x, y);
  }
  auto mse = [&] {
    double s = 0.0;
    for (const auto& [x, y] : data) s += 2.0 * loss(net, x, y);
    return s / data.size();
  };
  const double start = mse();
  for (int it = 0; it < 2000; ++it) {
    MlpGradients g = net.zero_gradients();
    for (const auto& [x, y] : data) {
      Mlp::Tape tape;
      const Vector out = net.forward(x, tape);
      net.backward(tape, out - y, g);
    }
    g *= 1.0 / data.size();
    opt.step(net, g);
  }
  EXPECT_LT(mse(), 0.01 * start);
}
