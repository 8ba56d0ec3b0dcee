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
#include <functional>
#include <map>
#include <sstream>
#include <random>
#include <vector>

#include "coperc/common.hpp"
#include "coperc/perception_metrics.hpp"
#include "coperc/scenario.hpp"
#include "metric_oracle.hpp"

using namespace coperc;
using namespace coperc::oracle;

namespace {

BevInstance block(std::int32_t id, std::size_t w0, std::size_t h0,
                  std::size_t nw, std::size_t nh, const BevSpec& spec) {
  BevInstance inst{id, {}};
  for (std::size_t h = h0; h < h0 + nh; ++h) {
    for (std::size_t w = w0; w < w0 + nw; ++w) {
      inst.cells.push_back(static_cast<std::uint32_t>(spec.index(w, h)));
    }
  }
  std::sort(inst.cells.begin(), inst.cells.end());
  return inst;
}

}  // namespace

TEST(Iou, IdentityDisjointAndOverlap) {
  const auto spec = grid16();
  const auto a = LabeledBev::from_instances(spec, {block(1, 0, 0, 2, 2, spec)});
  const auto b = LabeledBev::from_instances(spec, {block(1, 1, 0, 2, 2, spec)});
  const auto c = LabeledBev::from_instances(spec, {block(1, 8, 8, 2, 2, spec)});
  EXPECT_EQ(iou_semantic(a, a), 1.0);
  EXPECT_EQ(iou_semantic(a, c), 0.0);
  EXPECT_EQ(iou_semantic(a, b), 2.0 / 6.0);
  EXPECT_EQ(iou_semantic(a, b), iou_semantic(b, a));
  EXPECT_EQ(iou_semantic(LabeledBev::empty(spec), LabeledBev::empty(spec)), 1.0);
}

TEST(Iou, SpecMismatch) {
  auto other = grid16();
  other.dw = 2.0;
  EXPECT_THROW(iou_semantic(LabeledBev::empty(grid16()), LabeledBev::empty(other)),
               SpecMismatchError);
}

TEST(Iou, MeanOverFrames) {
  EXPECT_EQ(mean_iou_over_frames(std::vector<double>{1.0, 1.0, 1.0}), 1.0);
  EXPECT_EQ(mean_iou_over_frames(std::vector<double>{0.5, 1.0}), 0.75);
  EXPECT_THROW(mean_iou_over_frames(std::vector<double>{}), RangeError);
  Rng rng(1);
  std::vector<double> v(37);
  double sum = 0.0;
  for (auto& x : v) sum += (x = std::uniform_real_distribution<double>()(rng));
  EXPECT_DOUBLE_EQ(mean_iou_over_frames(v), sum / 37.0);
}

TEST(Match, IdentityAndLonePrediction) {
  const auto spec = grid16();
  const auto a = LabeledBev::from_instances(
      spec, {block(1, 0, 0, 3, 3, spec), block(2, 6, 6, 2, 4, spec)});
  const auto m = match_instances(a, a);
  EXPECT_EQ(m.tp.size(), 2u);
  for (const auto& p : m.tp) EXPECT_EQ(p.iou, 1.0);
  EXPECT_TRUE(m.fp.empty());
  EXPECT_TRUE(m.fn.empty());

  const auto lone = match_instances(a, LabeledBev::empty(spec));
  EXPECT_EQ(lone.fp.size(), 2u);
  EXPECT_TRUE(lone.tp.empty());
}

TEST(Match, TwoPredictionsOneGroundTruth) {
  const auto spec = grid16();
  // gt: 10 cells. p1 covers 6 of them plus nothing else -> 0.6.
  // p2 covers the other 4 plus 8 outside cells... -> 4 / 14.
  BevInstance gt{1, {}};
  for (std::uint32_t c = 0; c < 10; ++c) gt.cells.push_back(c);
  BevInstance p1{1, {0, 1, 2, 3, 4, 5}};
  BevInstance p2{2, {6, 7, 8, 9}};
  for (std::uint32_t c = 16; c < 22; ++c) p2.cells.push_back(c);
  const auto g = LabeledBev::from_instances(spec, {gt});
  const auto p = LabeledBev::from_instances(spec, {p1, p2});
  const auto m = match_instances(p, g);
  ASSERT_EQ(m.tp.size(), 1u);
  EXPECT_EQ(m.tp[0].pred, 1);
  EXPECT_DOUBLE_EQ(m.tp[0].iou, 0.6);
  EXPECT_EQ(m.fp, std::vector<std::int32_t>{2});
  EXPECT_TRUE(m.fn.empty());
}

TEST(Pq, HandExamples) {
  MatchResult one;
  one.tp.push_back({1, 1, 0.8});
  EXPECT_DOUBLE_EQ(panoptic_quality(one).pq, 0.8);
  one.fp.push_back(2);
  EXPECT_NEAR(panoptic_quality(one).pq, 0.8 / 1.5, 1e-15);
  const auto empty = panoptic_quality(MatchResult{});
  EXPECT_EQ(empty.pq, 0.0);
  EXPECT_TRUE(empty.empty);
  MatchResult miss;
  miss.fn.push_back(4);
  const auto q = panoptic_quality(miss);
  EXPECT_EQ(q.sq, 0.0);
  EXPECT_EQ(q.rq, 0.0);
}

TEST(Pq, RandomGridsMatchCellCountingOracle) {
  const auto spec = grid16();
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto gl = random_label_array(spec, rng, 5);
    // Mostly noisy copies of the ground truth, so that matches occur;
    // every fourth prediction is independent.
    const auto pl = trial % 4 == 0 ? random_label_array(spec, rng, 5)
                                   : perturb(gl, rng, 0.02 * (trial % 10), 5);
    const auto gt = from_label_array(spec, gl);
    const auto pred = from_label_array(spec, pl);
    const Oracle o = reference_metrics(pred, gt);
    EXPECT_EQ(iou_semantic(pred, gt), o.iou);
    const auto q = panoptic_quality(match_instances(pred, gt));
    EXPECT_EQ(q.tp, o.tp);
    EXPECT_EQ(q.fp, o.fp);
    EXPECT_EQ(q.fn, o.fn);
    EXPECT_EQ(q.sq, o.sq);
    EXPECT_EQ(q.rq, o.rq);
    EXPECT_EQ(q.pq, o.pq);
    EXPECT_NEAR(q.pq, q.sq * q.rq, 1e-12);
  }
}

TEST(Labels, ComponentsCarryMajorityId) {
  const auto spec = grid16();
  BevGrid g(spec);
  g.add(1, 1, 5);
  g.add(2, 1, 5);
  g.add(3, 1, 7);
  g.add(10, 10, 9);
  const auto l = labels_from_bev(g);
  EXPECT_EQ(l.vehicle_cells(), 4u);
  ASSERT_EQ(l.instances.size(), 2u);
  EXPECT_EQ(l.instances[0].id, 5);
  EXPECT_EQ(l.instances[0].cells.size(), 3u);
  EXPECT_EQ(l.instances[1].id, 9);
}

namespace {

ScenarioConfig proxy_config() {
  ScenarioConfig cfg;
  cfg.num_vehicles = 3;
  cfg.max_speed = 0.0;
  cfg.image_rows = 112;
  cfg.image_cols = 240;
  cfg.focal_px = 120.0;
  cfg.bev.dw = cfg.bev.dh = 1.0;
  cfg.uav_radius = 0.0;
  cfg.look_inward = 0.0;
  cfg.num_uavs = 1;
  cfg.area_x = cfg.area_y = 30.0;
  return cfg;
}

// Vehicles on whole-metre boundaries, so every ground-truth cell is fully
// covered and receives lifted pixels from the nadir camera.
Scenario aligned_scenario() {
  const auto cfg = proxy_config();
  std::vector<VehicleTrack> tracks{
      make_track(1, {2.0, -3.0, 6.0, -1.0}, {}, cfg),
      make_track(2, {-9.0, 4.0, -7.0, 9.0}, {}, cfg),
      make_track(3, {-2.0, -12.0, 3.0, -10.0}, {}, cfg)};
  return make_scenario(cfg, tracks, default_uav_poses(cfg));
}

}  // namespace

TEST(Proxy, FullRatioFullCoverageIsExact) {
  const auto s = aligned_scenario();
  const std::vector<std::uint8_t> sel{1};
  const std::vector<std::vector<std::uint8_t>> masks(1);
  for (std::size_t f = 0; f < s.config.frames; ++f) {
    const auto pred = proxy_perceive(s, f, sel, masks);
    EXPECT_EQ(pred, s.ground_truth[f]) << "frame " << f;
    EXPECT_EQ(iou_semantic(pred, s.ground_truth[f]), 1.0);
  }
}

TEST(Proxy, EmptySelectionRejected) {
  const auto s = aligned_scenario();
  const std::vector<std::uint8_t> sel{0};
  const std::vector<std::vector<std::uint8_t>> masks(1);
  EXPECT_THROW(proxy_perceive(s, 0, sel, masks), EmptySelectionError);
}

TEST(Proxy, NoSurvivingForegroundGivesEmptyPrediction) {
  const auto s = aligned_scenario();
  const auto img = render_view(s, s.uavs[0], 0);
  // Keep only background pixels: the adversarial scorer ranks every
  // vehicle pixel last.
  std::vector<std::uint8_t> mask(img.pixel_count(), 0);
  for (std::size_t p = 0; p < mask.size(); ++p) mask[p] = img.instance_ids()[p] == 0;
  const std::vector<std::uint8_t> sel{1};
  const std::vector<std::vector<std::uint8_t>> masks{mask};
  const auto pred = proxy_perceive(s, 0, sel, masks);
  EXPECT_EQ(pred.vehicle_cells(), 0u);
  EXPECT_EQ(iou_semantic(pred, s.ground_truth[0]), 0.0);
}

TEST(Metrics, CsvRow) {
  FrameMetrics m;
  m.frame = 3;
  m.iou = 0.5;
  std::ostringstream os;
  write_metrics_header(os);
  write_metrics_row(os, m);
  EXPECT_EQ(os.str().rfind("frame,iou,pq,sq,rq,tp,fp,fn\n3,0.5,0,0,0,0,0,0\n", 0), 0u);
}
