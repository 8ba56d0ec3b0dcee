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

#include "coperc/diffusion.hpp"

#include <cmath>
#include <random>
#include <string>

namespace coperc {

DiffusionSchedule::DiffusionSchedule(std::size_t steps, std::size_t ddim_steps,
                                     double beta_start, double beta_end)
    : steps_(steps),
      ddim_steps_(ddim_steps),
      beta_start_(beta_start),
      beta_end_(beta_end) {
  if (steps < 1) throw ConfigError("diffusion needs T >= 1");
  if (ddim_steps < 1 || ddim_steps > steps) {
    throw ConfigError("DDIM steps must lie in [1, T]");
  }
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_end < beta_start) {
    throw ConfigError("beta schedule must satisfy 0 < start <= end < 1");
  }
  beta_.assign(steps + 1, 0.0);
  alpha_bar_.assign(steps + 1, 1.0);
  for (std::size_t t = 1; t <= steps; ++t) {
    const double frac =
        steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
    beta_[t] = beta_start + frac * (beta_end - beta_start);
    alpha_bar_[t] = alpha_bar_[t - 1] * (1.0 - beta_[t]);
    if (!(alpha_bar_[t] < alpha_bar_[t - 1])) {
      throw ConfigError("alpha_bar must be strictly decreasing");
    }
  }
  // tau_i = round(i T / D), i = D..1.
  for (std::size_t i = ddim_steps; i >= 1; --i) {
    const std::size_t t = (i * steps + ddim_steps / 2) / ddim_steps;
    tau_.push_back(std::max<std::size_t>(1, t));
  }
}

double DiffusionSchedule::beta(std::size_t tau) const {
  if (tau < 1 || tau > steps_) throw RangeError("diffusion step out of range");
  return beta_[tau];
}

double DiffusionSchedule::alpha(std::size_t tau) const {
  return 1.0 - beta(tau);
}

double DiffusionSchedule::alpha_bar(std::size_t tau) const {
  if (tau > steps_) throw RangeError("diffusion step out of range");
  return alpha_bar_[tau];
}

Vector forward_noise(const Vector& w0, std::size_t tau,
                     const DiffusionSchedule& schedule, const Vector& eps) {
  if (w0.size() != eps.size()) throw ShapeError("noise and w0 differ in size");
  const double ab = schedule.alpha_bar(tau);
  return std::sqrt(ab) * w0 + std::sqrt(1.0 - ab) * eps;
}

Vector ddim_step(const Vector& w0_hat, const Vector& w_tau, std::size_t tau_i,
                 std::size_t tau_prev, const DiffusionSchedule& schedule) {
  if (!(tau_prev < tau_i)) throw RangeError("DDIM steps must move toward 0");
  if (w0_hat.size() != w_tau.size()) throw ShapeError("DDIM operand sizes differ");
  const double ab = schedule.alpha_bar(tau_i);
  const double ab_prev = schedule.alpha_bar(tau_prev);
  Vector eps_hat = Vector::Zero(w_tau.size());
  if (ab < 1.0) {
    eps_hat = (w_tau - std::sqrt(ab) * w0_hat) / std::sqrt(1.0 - ab);
  }
  return std::sqrt(ab_prev) * w0_hat + std::sqrt(1.0 - ab_prev) * eps_hat;
}

Vector time_embedding(std::size_t tau, std::size_t dims) {
  Vector e(static_cast<Eigen::Index>(dims));
  const std::size_t half = dims / 2;
  for (std::size_t k = 0; k < half; ++k) {
    const double freq =
        std::pow(1000.0, -static_cast<double>(k) / static_cast<double>(half));
    const double x = static_cast<double>(tau) * freq;
    e(static_cast<Eigen::Index>(2 * k)) = std::sin(x);
    e(static_cast<Eigen::Index>(2 * k + 1)) = std::cos(x);
  }
  if (dims % 2) e(static_cast<Eigen::Index>(dims - 1)) = 0.0;
  return e;
}

Denoiser::Denoiser(std::size_t w_dim, std::size_t c_dim,
                   const std::vector<std::size_t>& hidden, Rng& rng)
    : w_dim_(w_dim), c_dim_(c_dim) {
  if (w_dim < 1) throw ConfigError("denoiser needs a non-empty w");
  std::vector<std::size_t> sizes{w_dim + kTimeEmbedding + c_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(w_dim);
  net_ = Mlp(sizes, rng);
}

Vector Denoiser::input(const Vector& w_tau, std::size_t tau,
                       const Vector& c) const {
  if (static_cast<std::size_t>(w_tau.size()) != w_dim_ ||
      static_cast<std::size_t>(c.size()) != c_dim_) {
    throw ShapeError("denoiser input has the wrong shape");
  }
  Vector x(static_cast<Eigen::Index>(w_dim_ + kTimeEmbedding + c_dim_));
  x << w_tau, time_embedding(tau, kTimeEmbedding), c;
  return x;
}

Vector Denoiser::predict_w0(const Vector& w_tau, std::size_t tau,
                            const Vector& c) const {
  ++evaluations_;
  return net_.forward(input(w_tau, tau, c));
}

namespace {

SampleResult run_chain(const Denoiser& model, const Vector& c,
                       const DiffusionSchedule& schedule, const Vector& noise,
                       const std::vector<std::size_t>& taus) {
  if (static_cast<std::size_t>(noise.size()) != model.w_dim()) {
    throw ShapeError("initial noise has the wrong size");
  }
  const std::size_t before = model.evaluations();
  Vector w = noise;
  Vector w0_hat = Vector::Zero(noise.size());
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const std::size_t tau = taus[i];
    const std::size_t prev = i + 1 < taus.size() ? taus[i + 1] : 0;
    w0_hat = model.predict_w0(w, tau, c);
    w = ddim_step(w0_hat, w, tau, prev, schedule);
  }
  return {w, model.evaluations() - before};
}

}  // namespace

SampleResult ddim_sample(const Denoiser& model, const Vector& c,
                         const DiffusionSchedule& schedule, const Vector& noise) {
  return run_chain(model, c, schedule, noise, schedule.subsequence());
}

SampleResult full_chain_sample(const Denoiser& model, const Vector& c,
                               const DiffusionSchedule& schedule,
                               const Vector& noise) {
  std::vector<std::size_t> taus;
  for (std::size_t t = schedule.steps(); t >= 1; --t) taus.push_back(t);
  return run_chain(model, c, schedule, noise, taus);
}

double diffusion_train_step(Denoiser& model, MomentumSgd& opt,
                            std::span<const DiffusionSample> batch,
                            const DiffusionSchedule& schedule, Rng& rng,
                            std::size_t draws) {
  if (batch.empty()) throw ConfigError("diffusion batch is empty");
  if (draws < 1) throw ConfigError("need at least one noise draw");
  std::uniform_int_distribution<std::size_t> pick_tau(1, schedule.steps());
  std::normal_distribution<double> normal(0.0, 1.0);
  MlpGradients grads = model.net().zero_gradients();
  Mlp::Tape tape;
  double loss = 0.0;
  const double n = static_cast<double>(batch.size() * draws);
  for (const auto& s : batch) {
    for (std::size_t d = 0; d < draws; ++d) {
      const std::size_t tau = pick_tau(rng);
      Vector eps(s.w0.size());
      for (Eigen::Index k = 0; k < eps.size(); ++k) eps(k) = normal(rng);
      const Vector w_tau = forward_noise(s.w0, tau, schedule, eps);
      const Vector pred = model.net().forward(model.input(w_tau, tau, s.c), tape);
      const Vector err = pred - s.w0;
      loss += err.squaredNorm();
      model.net().backward(tape, (2.0 / n) * err, grads);
    }
  }
  opt.step(model.net(), grads);
  return loss / n;
}

DiffusionTrainResult train_diffusion(std::span<const DiffusionSample> dataset,
                                     const DiffusionSchedule& schedule,
                                     const DiffusionTrainConfig& cfg) {
  if (dataset.empty()) throw ConfigError("diffusion dataset is empty");
  Rng rng = make_rng(cfg.seed, "diffusion");
  DiffusionTrainResult out;
  out.model = Denoiser(static_cast<std::size_t>(dataset.front().w0.size()),
                       static_cast<std::size_t>(dataset.front().c.size()),
                       cfg.hidden, rng);
  MomentumSgd opt(out.model.net(), cfg.learning_rate, cfg.momentum);
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    out.losses.push_back(
        diffusion_train_step(out.model, opt, dataset, schedule, rng, cfg.draws));
  }
  return out;
}

}  // namespace coperc
