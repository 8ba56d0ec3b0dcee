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

#ifndef COPERC_OBJECTIVE_ENV_HPP
#define COPERC_OBJECTIVE_ENV_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "coperc/channel3d.hpp"
#include "coperc/mumimo_link.hpp"
#include "coperc/perception_metrics.hpp"
#include "coperc/scenario.hpp"
#include "coperc/sparsifier.hpp"

namespace coperc {

// Discrete top-k ratios kappa_min + n * step, n = 0 .. count-1.
struct KappaGrid {
  double kappa_min = 0.05;
  double step = 0.05;
  std::size_t count = 10;

  void validate() const;
  double at(std::size_t n) const;
  std::vector<double> values() const;

  bool operator==(const KappaGrid&) const = default;
};

struct JointAction {
  std::vector<std::uint8_t> select;        // one flag per UAV
  std::vector<std::size_t> kappa_idx;      // one per UAV; ignored if unselected
  std::vector<std::size_t> precoder_idx;   // one per UAV; ignored if unselected

  std::uint32_t select_mask() const;
  std::size_t selected_count() const;
  bool operator==(const JointAction&) const = default;
};

// Throws ConstraintViolation naming the violated constraint.
void validate_action(const JointAction& a, std::size_t uavs,
                     const KappaGrid& kappa, std::size_t codebook_size);

struct StepParams {
  KappaGrid kappa;
  double alpha = 0.5;
  double lambda = 0.1;
  unsigned bits_per_value = 8;
  double tx_power = 1.0;
  double noise_var = 0.1;

  void validate() const;
  bool operator==(const StepParams&) const = default;
};

struct StepOutcome {
  double utility_pq = 0.0;
  double utility_iou = 0.0;
  double latency_max = 0.0;
  double reward = 0.0;
  std::vector<double> rate_bps;      // per UAV, 0 when unselected
  std::vector<double> latency;       // per UAV, 0 when unselected
  std::vector<double> payload_bits;  // per UAV and image, 0 when unselected
  std::vector<double> wire_bits;     // per UAV and image, 0 when unselected
  std::vector<double> mean_sinr;     // per UAV, linear
  std::vector<FrameMetrics> frames;  // prediction frames

  double weighted_utility(double alpha) const {
    return alpha * utility_pq + (1.0 - alpha) * utility_iou;
  }
};

// D / R; +infinity when R == 0.
double latency(double payload_bits, double rate_bps);
// Largest latency among selected UAVs. Throws EmptySelectionError.
double max_latency(std::span<const std::uint8_t> selected,
                   std::span<const double> latencies);
// alpha * U_PQ + (1 - alpha) * U_IoU - lambda * L_max
double reward_value(double utility_pq, double utility_iou, double latency_max,
                    double alpha, double lambda);

struct ActionSpaceSizes {
  std::uint64_t uav_sets = 0;   // 2^U - 1
  std::uint64_t kappas = 0;     // N_kappa^U
  std::uint64_t precoders = 0;  // |P|^U
};
ActionSpaceSizes action_space_sizes(std::size_t uavs, std::size_t kappa_count,
                                    std::size_t codebook_size);

// Sparsifies one view and pushes it through the wire encoder and decoder.
struct TransmittedView {
  SparseImage received;
  std::uint64_t payload_bits = 0;
  std::uint64_t wire_bits = 0;
};
TransmittedView transmit_view(const DenseImage& image, double kappa,
                              unsigned bits_per_value);

// Reference (uncached) environment step over the scenario's prediction frames.
StepOutcome step(const Scenario& scenario, const ChannelRealization& channel,
                 const PrecoderCodebook& codebook, const JointAction& action,
                 const StepParams& params);

struct CodebookConfig {
  std::size_t nx = 2;
  std::size_t ny = 1;
  std::size_t ox = 4;
  std::size_t oy = 4;
  bool operator==(const CodebookConfig&) const = default;
};

struct EnvConfig {
  ScenarioConfig scenario;
  ChannelConfig channel;
  CodebookConfig codebook;
  StepParams params;
  std::size_t states = 4;   // independent (scene, channel) draws
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const EnvConfig&) const = default;
};

nlohmann::json env_config_to_json(const EnvConfig& cfg);
EnvConfig env_config_from_json(const nlohmann::json& j);

// A fixed set of (scene, channel) states with memoised perception, rate and
// label computations. Not thread-safe; use one instance per worker.
class Environment {
 public:
  explicit Environment(EnvConfig cfg);

  const EnvConfig& config() const noexcept { return cfg_; }
  std::size_t uavs() const noexcept { return cfg_.scenario.num_uavs; }
  std::size_t states() const noexcept { return states_.size(); }
  const PrecoderCodebook& codebook() const noexcept { return codebook_; }
  const Scenario& scenario(std::size_t s) const { return states_.at(s).scenario; }
  const ChannelRealization& channel(std::size_t s) const {
    return states_.at(s).channel;
  }

  StepOutcome step(std::size_t state, const JointAction& action);
  StepOutcome step(std::size_t state, const JointAction& action, double alpha,
                   double lambda);

  // Utilities (U_PQ, U_IoU) of a selection and kappa choice.
  std::pair<double, double> utilities(std::size_t state,
                                      const JointAction& action);
  LinkEvaluation link(std::size_t state, const JointAction& action);
  // Precoders minimising the largest latency for the action's selection
  // and kappas (the training label).
  std::vector<std::size_t> label_precoders(std::size_t state,
                                           const JointAction& action);

  // Per-UAV summary: |mean channel| average, foreground fraction and visible
  // instance share of the last input frame.
  std::vector<double> state_features(std::size_t state);
  std::size_t state_feature_size() const { return 3 * uavs(); }

  // Best (selection, kappas, precoders) by full enumeration.
  struct Optimum {
    JointAction action;
    double reward = 0.0;
  };
  Optimum enumerate_optimum(std::size_t state, double alpha, double lambda);

  // Every selection/kappa pair with unselected kappa indices set to 0.
  std::vector<JointAction> canonical_actions() const;

  std::vector<double> payload_bits(const JointAction& action) const;

 private:
  struct State {
    Scenario scenario;
    ChannelRealization channel;
  };
  struct ViewCache {
    std::vector<std::uint32_t> ranking;  // pixels by descending score
    std::vector<std::int32_t> cell;      // lifted cell or -1 per pixel
    std::vector<std::int32_t> id;        // instance id per pixel
  };

  const ViewCache& view(std::size_t state, std::size_t frame, std::size_t uav);
  JointAction canonical(const JointAction& a) const;

  EnvConfig cfg_;
  PrecoderCodebook codebook_;
  std::vector<State> states_;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, ViewCache> views_;
  std::map<std::pair<std::size_t, std::vector<std::size_t>>,
           std::pair<double, double>>
      utilities_;
  std::map<std::pair<std::size_t, std::vector<std::size_t>>, LinkEvaluation>
      links_;
  std::map<std::pair<std::size_t, std::vector<std::size_t>>,
           std::vector<std::size_t>>
      labels_;
  std::map<std::size_t, std::vector<double>> features_;
};

// step,state,select,kappa,precoder,rate_bps,latency_max,iou,pq,reward
void write_ledger_header(std::ostream& os);
void write_ledger_row(std::ostream& os, std::size_t step_index,
                      std::size_t state, const JointAction& action,
                      const StepOutcome& outcome);

}  // namespace coperc

#endif  // COPERC_OBJECTIVE_ENV_HPP
