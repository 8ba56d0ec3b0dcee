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

// coperc: simulate, train, sweep and report on cooperative-perception runs.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coperc/common.hpp"
#include "coperc/harness.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitMissingFile = 2;

std::vector<double> parse_points(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw coperc::ConfigError("--points: '" + tok + "' is not a number");
    }
  }
  if (out.empty()) throw coperc::ConfigError("--points: empty list");
  return out;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  coperc::RunConfig load() const {
    coperc::RunConfig cfg = coperc::load_run_config(config);
    if (seed) cfg.seed = *seed;
    if (out) cfg.output = *out;
    cfg.validate();
    return cfg;
  }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config,-c", c.config, "run configuration (JSON)")->required();
  sub->add_option("--seed", c.seed, "override the root seed");
  sub->add_option("--out,-o", c.out, "override the output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-UAV cooperative perception simulator"};
  app.set_version_flag("--version", std::string(coperc::version_string()));
  app.require_subcommand(1);

  Common sim, train, sweep;
  auto* sim_cmd = app.add_subcommand("simulate", "evaluate fixed actions on every state");
  add_common(sim_cmd, sim);

  auto* train_cmd = app.add_subcommand("train", "train the selection and precoding policy");
  add_common(train_cmd, train);
  bool resume = false;
  std::optional<std::size_t> stop_after;
  train_cmd->add_flag("--resume", resume, "continue from the run's checkpoint");
  train_cmd->add_option("--steps", stop_after, "stop once this many steps are done");

  auto* sweep_cmd = app.add_subcommand("sweep", "sweep one parameter");
  add_common(sweep_cmd, sweep);
  std::string axis;
  std::string points;
  sweep_cmd->add_option("--axis", axis, "lambda, kappa or uav_count")->required();
  sweep_cmd->add_option("--points", points, "comma-separated values");

  auto* report_cmd = app.add_subcommand("report", "summarise a run directory");
  std::string run_dir;
  std::optional<double> cost_ours, cost_baseline;
  report_cmd->add_option("run_dir", run_dir, "run directory")->required();
  report_cmd->add_option("--cost-ours", cost_ours, "transmission cost of the proposed scheme");
  report_cmd->add_option("--cost-baseline", cost_baseline, "transmission cost of the baseline");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) {
      const auto cfg = sim.load();
      coperc::cmd_simulate(cfg, cfg.output);
      std::cout << "wrote " << cfg.output << "/ledger.csv\n";
    } else if (train_cmd->parsed()) {
      const auto cfg = train.load();
      coperc::TrainOptions opts;
      opts.resume = resume;
      opts.stop_after = stop_after;
      const auto ev = coperc::cmd_train(cfg, cfg.output, opts);
      std::cout << "mean reward " << ev.mean_reward << ", mean latency "
                << ev.mean_latency << " s\n";
    } else if (sweep_cmd->parsed()) {
      const auto cfg = sweep.load();
      const auto ax = coperc::parse_sweep_axis(axis);
      const auto pts = points.empty() ? coperc::default_sweep_points(ax)
                                      : parse_points(points);
      coperc::cmd_sweep(cfg, ax, pts, cfg.output);
      std::cout << "wrote " << cfg.output << "/sweep_" << coperc::sweep_axis_name(ax)
                << ".csv\n";
    } else if (report_cmd->parsed()) {
      std::optional<coperc::CostRatio> cost;
      if (cost_ours || cost_baseline) {
        if (!cost_ours || !cost_baseline) {
          throw coperc::ConfigError("--cost-ours and --cost-baseline go together");
        }
        cost = coperc::CostRatio{*cost_ours, *cost_baseline};
      }
      std::cout << coperc::cmd_report(run_dir, cost).text;
    }
  } catch (const coperc::IoError& e) {
    std::cerr << "coperc: " << e.what() << '\n';
    return kExitMissingFile;
  } catch (const std::exception& e) {
    std::cerr << "coperc: " << e.what() << '\n';
    return kExitError;
  }
  return EXIT_SUCCESS;
}
