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

#ifndef COPERC_POLICY_HPP
#define COPERC_POLICY_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "coperc/diffusion.hpp"
#include "coperc/mumimo_link.hpp"
#include "coperc/nn.hpp"
#include "coperc/objective_env.hpp"

namespace coperc {

// Precoder vector layout: one slot per UAV, each slot holds the codebook
// vector's ports as interleaved (re, im). Unselected slots are zero.
Vector flatten_precoders(std::span<const std::size_t> precoder_idx,
                         std::span<const std::uint8_t> select,
                         const PrecoderCodebook& codebook);

// Codebook entry with the largest |w^H v| (lowest index on ties).
std::size_t nearest_codebook_entry(const CVector& v,
                                   const PrecoderCodebook& codebook);

// Projects each selected slot of a flattened vector onto the codebook.
// Unselected UAVs get index 0.
std::vector<std::size_t> project_to_codebook(const Vector& w,
                                             std::span<const std::uint8_t> select,
                                             const PrecoderCodebook& codebook);

// [selection one-hot (2^U - 1), kappa one-hots (U x N_kappa),
//  per-UAV |H| and arg(H)/pi of the grid-averaged channel]
std::size_t condition_size(std::size_t uavs, std::size_t kappa_count,
                           std::size_t rx, std::size_t tx);
Vector condition_vector(Environment& env, std::size_t state,
                        const JointAction& action);

// Factored action values:
//   Q(s, a) = set_head(s)[S] + sum_{u in S} kappa_head(s, S)[u, kappa_u]
class QNetwork {
 public:
  QNetwork() = default;
  QNetwork(std::size_t feature_dim, std::size_t uavs, std::size_t kappa_count,
           const std::vector<std::size_t>& hidden, double learning_rate,
           double momentum, Rng& rng);

  std::size_t uavs() const noexcept { return uavs_; }
  std::size_t kappa_count() const noexcept { return kappa_count_; }

  double value(const Vector& features, const JointAction& action) const;
  // Exact argmax over every selection (heads enumerated per selection).
  JointAction greedy(const Vector& features) const;
  // One step on 0.5 (Q - target)^2; returns that loss before the step.
  double update(const Vector& features, const JointAction& action,
                double target);

  Mlp& set_head() noexcept { return set_head_; }
  Mlp& kappa_head() noexcept { return kappa_head_; }
  MomentumSgd& set_optimizer() noexcept { return set_opt_; }
  MomentumSgd& kappa_optimizer() noexcept { return kappa_opt_; }
  const Mlp& set_head() const noexcept { return set_head_; }
  const Mlp& kappa_head() const noexcept { return kappa_head_; }
  const MomentumSgd& set_optimizer() const noexcept { return set_opt_; }
  const MomentumSgd& kappa_optimizer() const noexcept { return kappa_opt_; }

 private:
  Vector kappa_input(const Vector& features, std::uint32_t mask) const;

  std::size_t uavs_ = 0;
  std::size_t kappa_count_ = 0;
  Mlp set_head_;
  Mlp kappa_head_;
  MomentumSgd set_opt_;
  MomentumSgd kappa_opt_;
};

// Epsilon-greedy: with probability epsilon a uniform draw from `valid`,
// otherwise the greedy action. Precoder indices are left at 0.
JointAction q_select(const QNetwork& q, const Vector& features, double epsilon,
                     Rng& rng, std::span<const JointAction> valid);

struct PolicyConfig {
  std::size_t steps = 5000;
  std::size_t steps_per_epoch = 100;
  std::vector<std::size_t> q_hidden{64, 64};
  double q_learning_rate = 0.005;
  double q_momentum = 0.9;
  double epsilon_start = 1.0;
  double epsilon_end = 0.1;
  std::size_t epsilon_decay_steps = 3000;
  std::vector<std::size_t> diffusion_hidden{128, 128};
  double diffusion_learning_rate = 0.005;
  double diffusion_momentum = 0.9;
  std::size_t diffusion_draws = 8;
  std::size_t diffusion_steps = 100;  // T
  std::size_t ddim_steps = 10;        // D
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  bool label_guided = true;  // false: random codebook labels
  std::uint64_t seed = 1;

  void validate() const;
  DiffusionSchedule schedule() const {
    return DiffusionSchedule(diffusion_steps, ddim_steps, beta_start, beta_end);
  }
  bool operator==(const PolicyConfig&) const = default;
};

nlohmann::json policy_config_to_json(const PolicyConfig& cfg);
PolicyConfig policy_config_from_json(const nlohmann::json& j);

struct TrainingCurves {
  std::vector<double> reward;
  std::vector<double> latency;
  std::vector<double> q_loss;
  std::vector<double> diffusion_loss;

  bool operator==(const TrainingCurves&) const = default;
};

struct PolicyState {
  QNetwork q;
  Denoiser denoiser;
  MomentumSgd diffusion_opt;
  Rng rng;
  std::size_t steps_done = 0;
  TrainingCurves curves;
  // Partial sums of the epoch in progress.
  double acc_reward = 0.0;
  double acc_latency = 0.0;
  double acc_q_loss = 0.0;
  double acc_diffusion_loss = 0.0;
  std::size_t acc_count = 0;
};

PolicyState init_policy(Environment& env, const PolicyConfig& cfg);

// Runs `steps` more training steps. When `ledger` is given one row per step
// is appended (see write_ledger_row).
void train_policy(Environment& env, const PolicyConfig& cfg, PolicyState& st,
                  std::size_t steps, std::ostream* ledger = nullptr);

// Greedy selection plus DDIM-generated precoders for one state.
JointAction policy_action(Environment& env, const PolicyConfig& cfg,
                          const PolicyState& st, std::size_t state, Rng& rng);

struct PolicyEvaluation {
  double mean_reward = 0.0;
  double mean_latency = 0.0;
  double mean_utility = 0.0;
  double mean_snr_db = 0.0;
};
PolicyEvaluation evaluate_policy(Environment& env, const PolicyConfig& cfg,
                                 const PolicyState& st);

// Mean over states of the enumerated best reward.
double enumerated_optimum(Environment& env, double alpha, double lambda);

inline constexpr int kCheckpointSchemaVersion = 1;
void save_checkpoint(const PolicyState& st, const PolicyConfig& cfg,
                     const std::filesystem::path& path);
PolicyState load_checkpoint(const std::filesystem::path& path,
                            const PolicyConfig& cfg);

// epoch,reward,latency,q_loss,diffusion_loss
void write_curves_csv(std::ostream& os, const TrainingCurves& curves);

}  // namespace coperc

#endif  // COPERC_POLICY_HPP
