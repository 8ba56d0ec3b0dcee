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

#ifndef COPERC_NN_HPP
#define COPERC_NN_HPP

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "coperc/common.hpp"

namespace coperc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct MlpGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  void set_zero();
  MlpGradients& operator+=(const MlpGradients& other);
  MlpGradients& operator*=(double s);
};

// Fully connected network, tanh on hidden layers, linear output.
class Mlp {
 public:
  Mlp() = default;
  // sizes = {inputs, hidden..., outputs}. Weights ~ N(0, 1/fan_in), biases 0.
  Mlp(const std::vector<std::size_t>& sizes, Rng& rng);

  struct Tape {
    std::vector<Vector> activations;  // input, then each layer output
  };

  std::size_t inputs() const { return sizes_.front(); }
  std::size_t outputs() const { return sizes_.back(); }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  std::size_t layers() const noexcept { return weights_.size(); }

  Vector forward(const Vector& x) const;
  Vector forward(const Vector& x, Tape& tape) const;
  // Adds dLoss/dparams to `grads` and returns dLoss/dinput.
  Vector backward(const Tape& tape, const Vector& grad_out,
                  MlpGradients& grads) const;

  MlpGradients zero_gradients() const;

  std::vector<Matrix>& weights() noexcept { return weights_; }
  std::vector<Vector>& biases() noexcept { return biases_; }
  const std::vector<Matrix>& weights() const noexcept { return weights_; }
  const std::vector<Vector>& biases() const noexcept { return biases_; }

  std::size_t parameter_count() const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(const std::vector<double>& p);

  bool operator==(const Mlp& o) const {
    return sizes_ == o.sizes_ && flat_parameters() == o.flat_parameters();
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

// Gradient descent with classical momentum: v = mu v - lr g; theta += v.
class MomentumSgd {
 public:
  MomentumSgd() = default;
  MomentumSgd(const Mlp& net, double learning_rate, double momentum);

  void step(Mlp& net, const MlpGradients& grads);

  double learning_rate() const noexcept { return lr_; }
  double momentum() const noexcept { return mu_; }
  std::vector<double> flat_velocity() const;
  void set_flat_velocity(const std::vector<double>& v);

 private:
  double lr_ = 0.01;
  double mu_ = 0.9;
  MlpGradients velocity_;
};

nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace coperc

#endif  // COPERC_NN_HPP
