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

#ifndef COPERC_PERCEPTION_METRICS_HPP
#define COPERC_PERCEPTION_METRICS_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "coperc/camera_geometry.hpp"
#include "coperc/labeled_bev.hpp"

namespace coperc {

struct Scenario;

struct MatchPair {
  std::int32_t pred = 0;
  std::int32_t gt = 0;
  double iou = 0.0;
  bool operator==(const MatchPair&) const = default;
};

struct MatchResult {
  std::vector<MatchPair> tp;
  std::vector<std::int32_t> fp;  // unmatched prediction ids, ascending
  std::vector<std::int32_t> fn;  // unmatched ground-truth ids, ascending
};

struct PanopticQuality {
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  bool empty = false;  // no predictions and no ground truth
};

// |pred & gt| / |pred | gt| over vehicle cells; 1 when both are empty.
double iou_semantic(const LabeledBev& pred, const LabeledBev& gt);

// Arithmetic mean. Throws RangeError on an empty sequence.
double mean_iou_over_frames(std::span<const double> ious);

// Greedy one-to-one matching on descending IoU, keeping pairs with IoU > 0.5.
MatchResult match_instances(const LabeledBev& pred, const LabeledBev& gt);

PanopticQuality panoptic_quality(const MatchResult& match);
// Pools TP IoUs and counts over frames before forming SQ and RQ.
PanopticQuality panoptic_quality(std::span<const MatchResult> frames);

// Vehicle labels from a fused grid: every cell with count >= 1 is vehicle;
// 4-connected components become instances labelled with their majority id,
// and components sharing a majority id are merged.
LabeledBev labels_from_bev(const BevGrid& grid);

// Lifts the surviving foreground pixels of each selected UAV's view of
// `frame`, fuses them and labels the result. masks[u] may be empty (keep
// every pixel). Throws EmptySelectionError when no UAV is selected.
LabeledBev proxy_perceive(const Scenario& scenario, std::size_t frame,
                          std::span<const std::uint8_t> selected,
                          std::span<const std::vector<std::uint8_t>> masks);

struct FrameMetrics {
  std::size_t frame = 0;
  double iou = 0.0;
  PanopticQuality pq;
};

FrameMetrics evaluate_frame(std::size_t frame, const LabeledBev& pred,
                            const LabeledBev& gt);

// frame,iou,pq,sq,rq,tp,fp,fn
void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const FrameMetrics& m);

}  // namespace coperc

#endif  // COPERC_PERCEPTION_METRICS_HPP
