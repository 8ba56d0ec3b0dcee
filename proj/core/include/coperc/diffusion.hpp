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

#ifndef COPERC_DIFFUSION_HPP
#define COPERC_DIFFUSION_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "coperc/nn.hpp"

namespace coperc {

// Linear beta schedule over T steps with a D-step DDIM subsequence.
// alpha_bar(0) = 1 by convention.
class DiffusionSchedule {
 public:
  DiffusionSchedule() : DiffusionSchedule(100, 10, 1e-4, 2e-2) {}
  DiffusionSchedule(std::size_t steps, std::size_t ddim_steps,
                    double beta_start, double beta_end);

  std::size_t steps() const noexcept { return steps_; }
  std::size_t ddim_steps() const noexcept { return ddim_steps_; }
  double beta_start() const noexcept { return beta_start_; }
  double beta_end() const noexcept { return beta_end_; }

  double beta(std::size_t tau) const;       // 1 <= tau <= T
  double alpha(std::size_t tau) const;      // 1 <= tau <= T
  double alpha_bar(std::size_t tau) const;  // 0 <= tau <= T

  // tau_D > ... > tau_1, with tau_D = T.
  const std::vector<std::size_t>& subsequence() const noexcept { return tau_; }

 private:
  std::size_t steps_ = 0;
  std::size_t ddim_steps_ = 0;
  double beta_start_ = 0.0;
  double beta_end_ = 0.0;
  std::vector<double> beta_;       // index tau, beta_[0] unused
  std::vector<double> alpha_bar_;  // index tau
  std::vector<std::size_t> tau_;
};

// sqrt(ab) w0 + sqrt(1 - ab) eps. Throws RangeError for tau > T.
Vector forward_noise(const Vector& w0, std::size_t tau,
                     const DiffusionSchedule& schedule, const Vector& eps);

// One deterministic DDIM update from tau_i to tau_prev < tau_i.
Vector ddim_step(const Vector& w0_hat, const Vector& w_tau, std::size_t tau_i,
                 std::size_t tau_prev, const DiffusionSchedule& schedule);

// Conditional w0 predictor: input = [w_tau, sinusoidal(tau), c].
class Denoiser {
 public:
  static constexpr std::size_t kTimeEmbedding = 16;

  Denoiser() = default;
  Denoiser(std::size_t w_dim, std::size_t c_dim,
           const std::vector<std::size_t>& hidden, Rng& rng);

  std::size_t w_dim() const noexcept { return w_dim_; }
  std::size_t c_dim() const noexcept { return c_dim_; }
  Mlp& net() noexcept { return net_; }
  const Mlp& net() const noexcept { return net_; }

  Vector input(const Vector& w_tau, std::size_t tau, const Vector& c) const;
  Vector predict_w0(const Vector& w_tau, std::size_t tau, const Vector& c) const;

  // Predictor evaluations performed so far through predict_w0/sample.
  std::size_t evaluations() const noexcept { return evaluations_; }
  void reset_evaluations() noexcept { evaluations_ = 0; }

 private:
  std::size_t w_dim_ = 0;
  std::size_t c_dim_ = 0;
  Mlp net_;
  mutable std::size_t evaluations_ = 0;
};

Vector time_embedding(std::size_t tau, std::size_t dims);

struct SampleResult {
  Vector w0;
  std::size_t evaluations = 0;
};

// DDIM generation from w_T = noise along the schedule's subsequence, ending
// at tau = 0. Exactly ddim_steps() predictor evaluations.
SampleResult ddim_sample(const Denoiser& model, const Vector& c,
                         const DiffusionSchedule& schedule, const Vector& noise);
// Full ancestral-length chain (every tau from T to 1), T evaluations.
SampleResult full_chain_sample(const Denoiser& model, const Vector& c,
                               const DiffusionSchedule& schedule,
                               const Vector& noise);

struct DiffusionSample {
  Vector w0;
  Vector c;
};

// One optimiser update on the mean of ||w0_hat - w0||^2 over `draws` random
// (tau, eps) pairs per sample. Returns the mean loss before the update.
double diffusion_train_step(Denoiser& model, MomentumSgd& opt,
                            std::span<const DiffusionSample> batch,
                            const DiffusionSchedule& schedule, Rng& rng,
                            std::size_t draws);

struct DiffusionTrainConfig {
  std::vector<std::size_t> hidden{64, 64};
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t steps = 500;
  std::size_t draws = 8;
  std::uint64_t seed = 1;
};

struct DiffusionTrainResult {
  Denoiser model;
  std::vector<double> losses;
};

// Trains on the full dataset every step. Throws ConfigError when empty.
DiffusionTrainResult train_diffusion(std::span<const DiffusionSample> dataset,
                                     const DiffusionSchedule& schedule,
                                     const DiffusionTrainConfig& cfg);

}  // namespace coperc

#endif  // COPERC_DIFFUSION_HPP
