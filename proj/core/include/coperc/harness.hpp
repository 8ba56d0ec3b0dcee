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

#ifndef COPERC_HARNESS_HPP
#define COPERC_HARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "coperc/objective_env.hpp"
#include "coperc/policy.hpp"

namespace coperc {

struct RunConfig {
  EnvConfig env;
  PolicyConfig policy;
  std::uint64_t seed = 1;  // root of every random stream
  std::string output = "runs/default";

  // Validates every component; throws ConfigError naming the failed field.
  void validate() const;
  // Component configs with the root seed propagated into them.
  EnvConfig resolved_env() const;
  PolicyConfig resolved_policy() const;

  bool operator==(const RunConfig&) const = default;
};

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
// IoError if missing, ParseError if not JSON, ConfigError on schema errors.
RunConfig load_run_config(const std::filesystem::path& path);

// Creates `dir` and writes config.json, seed.txt and version.txt.
void prepare_run_dir(const std::filesystem::path& dir, const RunConfig& cfg);

// Number of sweep workers: COPERC_WORKERS if set, else hardware threads.
std::size_t worker_count();
// Runs fn(0..n-1) on up to `workers` threads. The first exception thrown by
// any task is rethrown after all threads finish.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

// For every state and kappa value: all UAVs selected at that kappa with
// label precoders. Writes ledger.csv and metrics.csv.
void cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out);

struct TrainOptions {
  bool resume = false;                   // continue from checkpoint.json
  std::optional<std::size_t> stop_after; // cap on total steps done
};
// Writes ledger.csv (appended on resume), curves.csv, checkpoint.json and
// evaluation.json.
PolicyEvaluation cmd_train(const RunConfig& cfg, const std::filesystem::path& out,
                           const TrainOptions& opts = {});

enum class SweepAxis { kLambda, kKappa, kUavCount };
SweepAxis parse_sweep_axis(const std::string& name);
const char* sweep_axis_name(SweepAxis axis);
std::vector<double> default_sweep_points(SweepAxis axis);

struct SweepRow {
  double x = 0.0;
  double mean_iou = 0.0;
  double mean_pq = 0.0;
  double utility = 0.0;
  double latency = 0.0;
  double snr_db = 0.0;
  double reward = 0.0;
  bool crossing = false;
};

// Sweep over one axis, one row per point in input order.
//   lambda:    train and evaluate a policy per lambda
//   kappa:     every UAV selected at that ratio
//   uav_count: every UAV selected at the largest grid ratio
std::vector<SweepRow> run_sweep(const RunConfig& cfg, SweepAxis axis,
                                const std::vector<double>& points,
                                std::size_t workers);

// Marks the point where the min-max normalised utility and SNR curves swap
// order (the later point of the bracketing pair).
void flag_crossings(std::vector<SweepRow>& rows);

// Writes sweep_<axis>.csv into `out`.
std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, SweepAxis axis,
                                const std::vector<double>& points,
                                const std::filesystem::path& out);

struct CostRatio {
  double ours = 0.0;
  double baseline = 0.0;
};

struct ReportSummary {
  std::size_t ledger_rows = 0;
  double mean_reward = 0.0;
  double mean_latency = 0.0;
  double max_latency = 0.0;
  double mean_iou = 0.0;
  double mean_pq = 0.0;
  double total_rate_bps = 0.0;
  std::optional<double> cost_ratio;  // ours / baseline
  std::string text;
};

// Reads the run directory's CSVs, writes summary.txt and report.csv
// (long format: source,series,x,value). IoError when `dir` is missing.
ReportSummary cmd_report(const std::filesystem::path& dir,
                         std::optional<CostRatio> cost = std::nullopt);

}  // namespace coperc

#endif  // COPERC_HARNESS_HPP
