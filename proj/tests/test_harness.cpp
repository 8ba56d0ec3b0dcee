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

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coperc/common.hpp"
#include "coperc/harness.hpp"

using namespace coperc;
namespace fs = std::filesystem;

namespace {

const fs::path kTiny = COPERC_SOURCE_DIR "/configs/tiny.json";

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("coperc_harness_" + name);
  fs::remove_all(d);
  return d;
}

RunConfig tiny(std::size_t states = 2) {
  RunConfig rc = load_run_config(kTiny);
  rc.env.states = states;
  return rc;
}

SweepRow row(double x, double utility, double snr) {
  SweepRow r;
  r.x = x;
  r.utility = utility;
  r.snr_db = snr;
  return r;
}

}  // namespace

TEST(RunConfigJson, RoundTripAndStrictKeys) {
  const RunConfig rc = load_run_config(kTiny);
  EXPECT_EQ(run_config_from_json(run_config_to_json(rc)), rc);
  auto j = run_config_to_json(rc);
  j["sed"] = 3;
  EXPECT_THROW(run_config_from_json(j), ConfigError);
  j = run_config_to_json(rc);
  j["policy"]["stepz"] = 3;
  EXPECT_THROW(run_config_from_json(j), ConfigError);
}

TEST(RunConfigJson, LoadErrors) {
  EXPECT_THROW(load_run_config("/nonexistent/coperc.json"), IoError);
  const fs::path bad = fs::temp_directory_path() / "coperc_bad_config.json";
  std::ofstream(bad) << "{ not json";
  EXPECT_THROW(load_run_config(bad), ParseError);
  fs::remove(bad);
}

TEST(RunConfig, RootSeedPropagates) {
  RunConfig rc = load_run_config(kTiny);
  rc.seed = 77;
  EXPECT_EQ(rc.resolved_env().seed, 77u);
  EXPECT_EQ(rc.resolved_policy().seed, 77u);
}

TEST(RunDir, PreparedFiles) {
  const fs::path d = fresh_dir("prepare");
  const RunConfig rc = tiny();
  prepare_run_dir(d, rc);
  EXPECT_TRUE(fs::exists(d / "config.json"));
  EXPECT_TRUE(fs::exists(d / "seed.txt"));
  EXPECT_TRUE(fs::exists(d / "version.txt"));
  EXPECT_EQ(load_run_config(d / "config.json"), rc);
  fs::remove_all(d);
}

TEST(ParallelFor, RunsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(50);
  parallel_for(50, 4, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(ParallelFor, RethrowsTaskException) {
  std::atomic<int> done{0};
  EXPECT_THROW(parallel_for(20, 3,
                            [&](std::size_t i) {
                              ++done;
                              if (i == 7) throw RangeError("task 7");
                            }),
               RangeError);
  EXPECT_GE(done.load(), 8);
}

TEST(Crossings, FlaggedWhereNormalisedCurvesSwap) {
  std::vector<SweepRow> rows{row(0.0, 1.0, 0.0), row(0.1, 0.8, 5.0),
                             row(0.2, 0.2, 8.0), row(0.3, 0.0, 10.0)};
  flag_crossings(rows);
  // Normalised: u = 1, .8, .2, 0 and s = 0, .5, .8, 1.
  EXPECT_FALSE(rows[0].crossing);
  EXPECT_FALSE(rows[1].crossing);
  EXPECT_TRUE(rows[2].crossing);
  EXPECT_FALSE(rows[3].crossing);

  std::vector<SweepRow> flat{row(0.0, 1.0, 0.0), row(1.0, 2.0, 1.0)};
  flag_crossings(flat);
  EXPECT_FALSE(flat[1].crossing);
}

TEST(SweepAxis, Names) {
  for (auto a : {SweepAxis::kLambda, SweepAxis::kKappa, SweepAxis::kUavCount}) {
    EXPECT_EQ(parse_sweep_axis(sweep_axis_name(a)), a);
  }
  EXPECT_THROW(parse_sweep_axis("rho"), ConfigError);
}

TEST(Sweep, KappaUtilityRisesWithRatio) {
  const RunConfig rc = tiny();
  const auto rows = run_sweep(rc, SweepAxis::kKappa, {0.05, 0.15, 0.5}, 1);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GT(rows[i].latency, rows[i - 1].latency);
    EXPECT_GE(rows[i].mean_iou, rows[i - 1].mean_iou);
  }
}

TEST(Simulate, RerunIsByteIdentical) {
  const RunConfig rc = tiny();
  const fs::path a = fresh_dir("sim_a");
  const fs::path b = fresh_dir("sim_b");
  cmd_simulate(rc, a);
  cmd_simulate(rc, b);
  const std::string la = slurp(a / "ledger.csv");
  EXPECT_FALSE(la.empty());
  EXPECT_EQ(la, slurp(b / "ledger.csv"));
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));

  // Report twice, same bytes; totals agree with the ledger.
  const auto r1 = cmd_report(a, CostRatio{1.0, 4.0});
  const std::string report1 = slurp(a / "report.csv");
  const auto r2 = cmd_report(a, CostRatio{1.0, 4.0});
  EXPECT_EQ(r1.text, r2.text);
  EXPECT_EQ(report1, slurp(a / "report.csv"));
  ASSERT_TRUE(r1.cost_ratio.has_value());
  EXPECT_EQ(*r1.cost_ratio, 0.25);

  std::istringstream lines(la);
  std::string line;
  std::getline(lines, line);
  std::size_t n = 0;
  double reward = 0.0;
  while (std::getline(lines, line)) {
    ++n;
    reward += std::stod(line.substr(line.rfind(',') + 1));
  }
  EXPECT_EQ(r1.ledger_rows, n);
  EXPECT_EQ(n, rc.env.states * rc.env.params.kappa.count);
  EXPECT_NEAR(r1.mean_reward, reward / static_cast<double>(n), 1e-12);

  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Report, MissingRunDirectory) {
  EXPECT_THROW(cmd_report(fresh_dir("missing")), IoError);
}

#ifdef COPERC_CLI_PATH
TEST(Cli, ExitCodes) {
  const std::string cli = COPERC_CLI_PATH;
  const std::string quiet = " >/dev/null 2>&1";
  auto code = [](int status) { return WEXITSTATUS(status); };
  EXPECT_EQ(code(std::system((cli + " simulate --config /nonexistent.json" + quiet).c_str())), 2);
  EXPECT_EQ(code(std::system((cli + " report /nonexistent/run" + quiet).c_str())), 2);
  EXPECT_NE(code(std::system((cli + " bogus" + quiet).c_str())), 0);
  const fs::path d = fresh_dir("cli");
  EXPECT_EQ(code(std::system((cli + " simulate --config " + kTiny.string() +
                              " --out " + d.string() + quiet).c_str())),
            0);
  EXPECT_TRUE(fs::exists(d / "ledger.csv"));
  EXPECT_EQ(code(std::system((cli + " report " + d.string() + quiet).c_str())), 0);
  fs::remove_all(d);
}
#endif
