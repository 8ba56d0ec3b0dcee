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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "coperc/common.hpp"
#include "coperc/harness.hpp"
#include "coperc/objective_env.hpp"

using namespace coperc;

namespace {

EnvConfig tiny_env(std::uint64_t seed = 1) {
  RunConfig rc = load_run_config(COPERC_SOURCE_DIR "/configs/tiny.json");
  rc.seed = seed;
  EnvConfig env = rc.resolved_env();
  env.states = 2;
  return env;
}

JointAction action(std::vector<std::uint8_t> sel, std::vector<std::size_t> kappa,
                   std::vector<std::size_t> prec) {
  return {std::move(sel), std::move(kappa), std::move(prec)};
}

}  // namespace

TEST(Latency, Examples) {
  EXPECT_DOUBLE_EQ(latency(645120.0, 1e6), 0.64512);
  EXPECT_EQ(latency(24.0, 24.0), 1.0);
  EXPECT_EQ(latency(1000.0, 200.0), 2.0 * latency(1000.0, 400.0));
  EXPECT_EQ(latency(10.0, 0.0), std::numeric_limits<double>::infinity());
}

TEST(Latency, MaxOverSelectedOnly) {
  const std::vector<double> lat{0.3, 0.9, 0.5};
  EXPECT_EQ(max_latency(std::vector<std::uint8_t>{1, 0, 0}, lat), 0.3);
  EXPECT_EQ(max_latency(std::vector<std::uint8_t>{1, 0, 1}, lat), 0.5);
  EXPECT_EQ(max_latency(std::vector<std::uint8_t>{1, 1, 1},
                        std::vector<double>{0.2, 0.2, 0.2}),
            0.2);
  EXPECT_THROW(max_latency(std::vector<std::uint8_t>{0, 0, 0}, lat),
               EmptySelectionError);
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int n = 0; n < 100; ++n) {
    std::vector<double> l(6);
    std::vector<std::uint8_t> s(6);
    double worst = -1.0;
    for (int k = 0; k < 6; ++k) {
      l[k] = u(rng);
      s[k] = static_cast<std::uint8_t>(k == 0 || rng() % 2);
      if (s[k] && l[k] > worst) worst = l[k];
    }
    EXPECT_EQ(max_latency(s, l), worst);
  }
}

TEST(Reward, IdentityAndLimits) {
  EXPECT_EQ(reward_value(0.4, 0.6, 2.0, 0.5, 0.0), 0.5 * 0.4 + 0.5 * 0.6);
  EXPECT_EQ(reward_value(0.4, 0.6, 2.0, 1.0, 0.0), 0.4);
  // Strictly decreasing in latency for lambda > 0.
  double prev = std::numeric_limits<double>::infinity();
  for (double l : {0.0, 0.1, 0.5, 1.0, 3.0}) {
    const double r = reward_value(0.4, 0.6, l, 0.5, 0.3);
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(ActionSpace, Sizes) {
  EXPECT_EQ(action_space_sizes(4, 5, 128).uav_sets, 15u);
  EXPECT_EQ(action_space_sizes(1, 5, 128).kappas, 5u);
  EXPECT_EQ(action_space_sizes(2, 5, 128).precoders, 16384u);
}

TEST(Action, ConstraintTags) {
  const KappaGrid k{0.05, 0.1, 3};
  auto expect_tag = [&](const JointAction& a, const char* tag) {
    try {
      validate_action(a, 2, k, 16);
      ADD_FAILURE() << "expected violation " << tag;
    } catch (const ConstraintViolation& e) {
      EXPECT_EQ(e.constraint(), tag);
    }
  };
  expect_tag(action({0, 0}, {0, 0}, {0, 0}), "association");
  expect_tag(action({2, 0}, {0, 0}, {0, 0}), "association");
  expect_tag(action({1, 0}, {3, 0}, {0, 0}), "kappa_range");
  expect_tag(action({1, 1}, {0, 0}, {0, 16}), "codebook_membership");
  EXPECT_NO_THROW(validate_action(action({1, 0}, {2, 9}, {15, 99}), 2, k, 16));
}

TEST(Transmit, WireBitsAndLosslessReception) {
  DenseImage img(20, 30, 3);
  Rng rng(4);
  std::uniform_int_distribution<int> lvl(0, 255);
  for (auto& v : img.values()) v = lvl(rng) / 255.0;
  const auto tv = transmit_view(img, 0.25, 8);
  EXPECT_EQ(tv.payload_bits, data_size(20, 30, 3, 0.25, 8));
  EXPECT_EQ(tv.wire_bits, tv.payload_bits + wire_overhead_bits(150));
  EXPECT_EQ(tv.received.count(), 150u);
}

class EnvFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { env_ = new Environment(tiny_env()); }
  static void TearDownTestSuite() {
    delete env_;
    env_ = nullptr;
  }
  static Environment* env_;
};
Environment* EnvFixture::env_ = nullptr;

TEST_F(EnvFixture, CachedStepMatchesReferenceStep) {
  Environment& env = *env_;
  for (std::size_t s = 0; s < env.states(); ++s) {
    for (const auto& a0 : env.canonical_actions()) {
      JointAction a = a0;
      a.precoder_idx = {3, 11};
      const StepOutcome cached = env.step(s, a);
      const StepOutcome ref = step(env.scenario(s), env.channel(s), env.codebook(),
                                   a, env.config().params);
      EXPECT_EQ(cached.utility_iou, ref.utility_iou);
      EXPECT_EQ(cached.utility_pq, ref.utility_pq);
      EXPECT_EQ(cached.rate_bps, ref.rate_bps);
      EXPECT_EQ(cached.latency_max, ref.latency_max);
      EXPECT_EQ(cached.reward, ref.reward);
      EXPECT_EQ(cached.payload_bits, ref.payload_bits);
      EXPECT_EQ(cached.wire_bits, ref.wire_bits);
    }
  }
}

TEST_F(EnvFixture, RewardIdentityHoldsExactly) {
  Environment& env = *env_;
  for (const auto& a : env.canonical_actions()) {
    for (double lambda : {0.0, 0.1, 0.9}) {
      for (double alpha : {0.0, 0.5, 1.0}) {
        const auto o = env.step(0, a, alpha, lambda);
        EXPECT_EQ(o.reward, alpha * o.utility_pq + (1.0 - alpha) * o.utility_iou -
                                lambda * o.latency_max);
        if (lambda == 0.0) {
          EXPECT_EQ(o.reward, o.weighted_utility(alpha));
        }
        if (alpha == 1.0 && lambda == 0.0) {
          EXPECT_EQ(o.reward, o.utility_pq);
        }
      }
    }
  }
}

TEST_F(EnvFixture, RepeatedStepIsBitIdentical) {
  Environment fresh(tiny_env());
  const auto a = action({1, 1}, {1, 2}, {5, 7});
  const auto x = env_->step(1, a);
  const auto y = fresh.step(1, a);
  EXPECT_EQ(x.reward, y.reward);
  EXPECT_EQ(x.rate_bps, y.rate_bps);
}

TEST_F(EnvFixture, LabelPrecodersMinimiseLatency) {
  Environment& env = *env_;
  const auto a = action({1, 1}, {0, 2}, {0, 0});
  auto labelled = a;
  labelled.precoder_idx = env.label_precoders(0, a);
  const double best = env.step(0, labelled).latency_max;
  Rng rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, env.codebook().size() - 1);
  for (int n = 0; n < 30; ++n) {
    auto other = a;
    other.precoder_idx = {pick(rng), pick(rng)};
    EXPECT_LE(best, env.step(0, other).latency_max);
  }
}

TEST_F(EnvFixture, OptimumBeatsEveryCanonicalAction) {
  Environment& env = *env_;
  const auto opt = env.enumerate_optimum(0, 0.5, 0.3);
  for (auto a : env.canonical_actions()) {
    a.precoder_idx = env.label_precoders(0, a);
    EXPECT_LE(env.step(0, a, 0.5, 0.3).reward, opt.reward + 1e-12);
  }
  EXPECT_EQ(env.canonical_actions().size(), 3u + 3u + 9u);
}

TEST_F(EnvFixture, LedgerRowShape) {
  std::ostringstream os;
  write_ledger_header(os);
  const auto a = action({1, 0}, {1, 0}, {2, 0});
  write_ledger_row(os, 0, 0, a, env_->step(0, a));
  const std::string text = os.str();
  EXPECT_EQ(text.rfind("step,state,select,kappa,precoder,rate_bps,latency_max,iou,pq,reward\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(EnvConfigJson, RoundTripAndStrict) {
  const EnvConfig cfg = tiny_env();
  EXPECT_EQ(env_config_from_json(env_config_to_json(cfg)), cfg);
  auto j = env_config_to_json(cfg);
  j["params"]["lamda"] = 0.3;
  EXPECT_THROW(env_config_from_json(j), ConfigError);
}
