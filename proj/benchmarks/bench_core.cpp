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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "coperc/diffusion.hpp"
#include "coperc/harness.hpp"
#include "coperc/mumimo_link.hpp"
#include "coperc/objective_env.hpp"
#include "coperc/sparsifier.hpp"

using namespace coperc;

namespace {

void BM_BuildCodebook(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(build_codebook(2, 1, 4, 4));
}
BENCHMARK(BM_BuildCodebook);

void BM_MmseEqualizer(benchmark::State& state) {
  const auto users = static_cast<Eigen::Index>(state.range(0));
  Rng rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix h(8, users);
  for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = Complex(g(rng), g(rng));
  for (auto _ : state) {
    const CMatrix eq = mmse_equalizer(h, 0.1);
    benchmark::DoNotOptimize(sinr_per_uav(eq, h, 0.1));
  }
}
BENCHMARK(BM_MmseEqualizer)->Arg(1)->Arg(2)->Arg(4);

void BM_TopKSelect(benchmark::State& state) {
  Rng rng(2);
  std::uniform_int_distribution<int> level(0, 255);
  DenseImage img(224, 480, 3);
  for (auto& v : img.values()) v = level(rng) / 255.0;
  const double kappa = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) {
    const auto scores = neighborhood_score(importance_map(img));
    benchmark::DoNotOptimize(top_k_select(img, scores, kappa));
  }
}
BENCHMARK(BM_TopKSelect)->Arg(5)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_EnvironmentStep(benchmark::State& state) {
  RunConfig rc = load_run_config(COPERC_SOURCE_DIR "/configs/tiny.json");
  rc.env.states = 1;
  Environment env(rc.resolved_env());
  JointAction a{{1, 1}, {1, 2}, {0, 0}};
  a.precoder_idx = env.label_precoders(0, a);
  env.step(0, a);  // warm the view cache
  for (auto _ : state) benchmark::DoNotOptimize(env.step(0, a));
}
BENCHMARK(BM_EnvironmentStep)->Unit(benchmark::kMicrosecond);

void BM_DdimSample(benchmark::State& state) {
  const DiffusionSchedule schedule(100, static_cast<std::size_t>(state.range(0)),
                                   1e-4, 2e-2);
  Rng rng(3);
  const Denoiser model(16, 147, {128, 128}, rng);
  const Vector c = Vector::Zero(147);
  const Vector noise = Vector::Ones(16);
  for (auto _ : state) benchmark::DoNotOptimize(ddim_sample(model, c, schedule, noise));
}
BENCHMARK(BM_DdimSample)->Arg(10)->Arg(100)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
