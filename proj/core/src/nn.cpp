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

#include "coperc/nn.hpp"

#include <cmath>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

namespace coperc {

void MlpGradients::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

MlpGradients& MlpGradients::operator+=(const MlpGradients& o) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += o.weights[l];
    biases[l] += o.biases[l];
  }
  return *this;
}

MlpGradients& MlpGradients::operator*=(double s) {
  for (auto& w : weights) w *= s;
  for (auto& b : biases) b *= s;
  return *this;
}

Mlp::Mlp(const std::vector<std::size_t>& sizes, Rng& rng) : sizes_(sizes) {
  if (sizes.size() < 2) throw ConfigError("network needs at least two layers");
  for (std::size_t s : sizes) {
    if (s < 1) throw ConfigError("network layer widths must be >= 1");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(sizes[l]);
    const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    Matrix w(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) w(r, c) = scale * normal(rng);
    }
    weights_.push_back(std::move(w));
    biases_.push_back(Vector::Zero(out));
  }
}

Vector Mlp::forward(const Vector& x) const {
  Tape t;
  return forward(x, t);
}

Vector Mlp::forward(const Vector& x, Tape& tape) const {
  if (static_cast<std::size_t>(x.size()) != inputs()) {
    throw ShapeError("network input has " + std::to_string(x.size()) +
                     " entries, expected " + std::to_string(inputs()));
  }
  tape.activations.clear();
  tape.activations.push_back(x);
  Vector a = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Vector z = weights_[l] * a + biases_[l];
    if (l + 1 < weights_.size()) z = z.array().tanh().matrix();
    tape.activations.push_back(z);
    a = std::move(z);
  }
  return a;
}

Vector Mlp::backward(const Tape& tape, const Vector& grad_out,
                     MlpGradients& grads) const {
  if (static_cast<std::size_t>(grad_out.size()) != outputs()) {
    throw ShapeError("output gradient has the wrong size");
  }
  Vector delta = grad_out;
  for (std::size_t l = weights_.size(); l-- > 0;) {
    if (l + 1 < weights_.size()) {
      const Vector& y = tape.activations[l + 1];
      delta = delta.cwiseProduct((1.0 - y.array().square()).matrix());
    }
    grads.weights[l].noalias() += delta * tape.activations[l].transpose();
    grads.biases[l] += delta;
    delta = weights_[l].transpose() * delta;
  }
  return delta;
}

MlpGradients Mlp::zero_gradients() const {
  MlpGradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Vector::Zero(biases_[l].size()));
  }
  return g;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

std::vector<double> Mlp::flat_parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    p.insert(p.end(), weights_[l].data(), weights_[l].data() + weights_[l].size());
    p.insert(p.end(), biases_[l].data(), biases_[l].data() + biases_[l].size());
  }
  return p;
}

void Mlp::set_flat_parameters(const std::vector<double>& p) {
  if (p.size() != parameter_count()) {
    throw ShapeError("parameter vector has the wrong length");
  }
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (Eigen::Index i = 0; i < weights_[l].size(); ++i) weights_[l].data()[i] = p[k++];
    for (Eigen::Index i = 0; i < biases_[l].size(); ++i) biases_[l].data()[i] = p[k++];
  }
}

MomentumSgd::MomentumSgd(const Mlp& net, double learning_rate, double momentum)
    : lr_(learning_rate), mu_(momentum), velocity_(net.zero_gradients()) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
}

void MomentumSgd::step(Mlp& net, const MlpGradients& grads) {
  for (std::size_t l = 0; l < net.layers(); ++l) {
    velocity_.weights[l] = mu_ * velocity_.weights[l] - lr_ * grads.weights[l];
    velocity_.biases[l] = mu_ * velocity_.biases[l] - lr_ * grads.biases[l];
    net.weights()[l] += velocity_.weights[l];
    net.biases()[l] += velocity_.biases[l];
  }
}

std::vector<double> MomentumSgd::flat_velocity() const {
  std::vector<double> p;
  for (std::size_t l = 0; l < velocity_.weights.size(); ++l) {
    const auto& w = velocity_.weights[l];
    const auto& b = velocity_.biases[l];
    p.insert(p.end(), w.data(), w.data() + w.size());
    p.insert(p.end(), b.data(), b.data() + b.size());
  }
  return p;
}

void MomentumSgd::set_flat_velocity(const std::vector<double>& v) {
  std::size_t k = 0;
  for (std::size_t l = 0; l < velocity_.weights.size(); ++l) {
    auto& w = velocity_.weights[l];
    auto& b = velocity_.biases[l];
    if (k + static_cast<std::size_t>(w.size() + b.size()) > v.size()) {
      throw ShapeError("velocity vector has the wrong length");
    }
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = v[k++];
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = v[k++];
  }
  if (k != v.size()) throw ShapeError("velocity vector has the wrong length");
}

nlohmann::json mlp_to_json(const Mlp& net) {
  return {{"sizes", net.sizes()}, {"parameters", net.flat_parameters()}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  const auto sizes = j.at("sizes").get<std::vector<std::size_t>>();
  Rng dummy(0);
  Mlp net(sizes, dummy);
  net.set_flat_parameters(j.at("parameters").get<std::vector<double>>());
  return net;
}

}  // namespace coperc
