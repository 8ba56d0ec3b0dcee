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

#include "coperc/perception_metrics.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <string>
#include <tuple>

#include "coperc/common.hpp"
#include "coperc/scenario.hpp"

namespace coperc {
namespace {

void require_same_spec(const LabeledBev& a, const LabeledBev& b) {
  if (!(a.spec == b.spec) || a.semantic.size() != b.semantic.size()) {
    throw SpecMismatchError("label grids use different BEV specs");
  }
}

std::size_t intersection_size(const std::vector<std::uint32_t>& a,
                              const std::vector<std::uint32_t>& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

}  // namespace

double iou_semantic(const LabeledBev& pred, const LabeledBev& gt) {
  require_same_spec(pred, gt);
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t c = 0; c < pred.semantic.size(); ++c) {
    const bool p = pred.semantic[c] != 0;
    const bool g = gt.semantic[c] != 0;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double mean_iou_over_frames(std::span<const double> ious) {
  if (ious.empty()) throw RangeError("mean IoU needs at least one frame");
  double s = 0.0;
  for (double v : ious) s += v;
  return s / static_cast<double>(ious.size());
}

MatchResult match_instances(const LabeledBev& pred, const LabeledBev& gt) {
  require_same_spec(pred, gt);
  struct Candidate {
    double iou;
    std::size_t p;
    std::size_t g;
  };
  std::vector<Candidate> cands;
  for (std::size_t p = 0; p < pred.instances.size(); ++p) {
    const auto& pc = pred.instances[p].cells;
    for (std::size_t g = 0; g < gt.instances.size(); ++g) {
      const auto& gc = gt.instances[g].cells;
      const std::size_t inter = intersection_size(pc, gc);
      if (inter == 0) continue;
      const std::size_t uni = pc.size() + gc.size() - inter;
      const double iou = static_cast<double>(inter) / static_cast<double>(uni);
      if (iou > 0.5) cands.push_back({iou, p, g});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.iou, a.p, a.g) < std::tie(a.iou, b.p, b.g);
  });
  std::vector<std::uint8_t> pused(pred.instances.size(), 0);
  std::vector<std::uint8_t> gused(gt.instances.size(), 0);
  MatchResult m;
  for (const auto& c : cands) {
    if (pused[c.p] || gused[c.g]) continue;
    pused[c.p] = gused[c.g] = 1;
    m.tp.push_back({pred.instances[c.p].id, gt.instances[c.g].id, c.iou});
  }
  for (std::size_t p = 0; p < pred.instances.size(); ++p) {
    if (!pused[p]) m.fp.push_back(pred.instances[p].id);
  }
  for (std::size_t g = 0; g < gt.instances.size(); ++g) {
    if (!gused[g]) m.fn.push_back(gt.instances[g].id);
  }
  std::sort(m.fp.begin(), m.fp.end());
  std::sort(m.fn.begin(), m.fn.end());
  return m;
}

PanopticQuality panoptic_quality(const MatchResult& match) {
  return panoptic_quality(std::span<const MatchResult>(&match, 1));
}

PanopticQuality panoptic_quality(std::span<const MatchResult> frames) {
  PanopticQuality q;
  double iou_sum = 0.0;
  for (const auto& m : frames) {
    for (const auto& t : m.tp) iou_sum += t.iou;
    q.tp += m.tp.size();
    q.fp += m.fp.size();
    q.fn += m.fn.size();
  }
  const double tp = static_cast<double>(q.tp);
  const double denom =
      tp + 0.5 * static_cast<double>(q.fp) + 0.5 * static_cast<double>(q.fn);
  q.empty = denom == 0.0;
  q.sq = q.tp > 0 ? iou_sum / tp : 0.0;
  q.rq = denom > 0.0 ? tp / denom : 0.0;
  q.pq = q.sq * q.rq;
  return q;
}

LabeledBev labels_from_bev(const BevGrid& grid) {
  const BevSpec& spec = grid.spec();
  const std::size_t W = grid.width();
  const std::size_t H = grid.height();
  const auto& counts = grid.counts();
  const auto& entries = grid.id_entries();

  std::vector<long> comp(W * H, -1);
  std::vector<std::vector<std::uint32_t>> components;
  std::vector<std::uint32_t> stack;
  for (std::size_t c = 0; c < W * H; ++c) {
    if (counts[c] == 0 || comp[c] >= 0) continue;
    const long label = static_cast<long>(components.size());
    components.emplace_back();
    stack.assign(1, static_cast<std::uint32_t>(c));
    comp[c] = label;
    while (!stack.empty()) {
      const std::uint32_t cur = stack.back();
      stack.pop_back();
      components.back().push_back(cur);
      const std::size_t w = cur % W;
      const std::size_t h = cur / W;
      const std::uint32_t nb[4] = {
          w > 0 ? cur - 1 : cur, w + 1 < W ? cur + 1 : cur,
          h > 0 ? static_cast<std::uint32_t>(cur - W) : cur,
          h + 1 < H ? static_cast<std::uint32_t>(cur + W) : cur};
      for (std::uint32_t n : nb) {
        if (n != cur && counts[n] > 0 && comp[n] < 0) {
          comp[n] = label;
          stack.push_back(n);
        }
      }
    }
  }

  std::map<std::int32_t, std::vector<std::uint32_t>> by_id;
  for (auto& cells : components) {
    std::sort(cells.begin(), cells.end());
    std::map<std::int32_t, std::size_t> votes;
    for (std::uint32_t c : cells) {
      auto lo = std::lower_bound(
          entries.begin(), entries.end(),
          std::pair<std::uint32_t, std::int32_t>{c, INT32_MIN});
      for (; lo != entries.end() && lo->first == c; ++lo) ++votes[lo->second];
    }
    std::int32_t best = 0;
    std::size_t best_votes = 0;
    for (const auto& [id, n] : votes) {
      if (n > best_votes) {
        best = id;
        best_votes = n;
      }
    }
    auto& dst = by_id[best];
    dst.insert(dst.end(), cells.begin(), cells.end());
  }
  std::vector<BevInstance> instances;
  for (auto& [id, cells] : by_id) instances.push_back({id, std::move(cells)});
  return LabeledBev::from_instances(spec, std::move(instances));
}

LabeledBev proxy_perceive(const Scenario& scenario, std::size_t frame,
                          std::span<const std::uint8_t> selected,
                          std::span<const std::vector<std::uint8_t>> masks) {
  const std::size_t U = scenario.uavs.size();
  if (selected.size() != U) {
    throw ShapeError("selection must have one entry per UAV");
  }
  if (!masks.empty() && masks.size() != U) {
    throw ShapeError("masks must have one entry per UAV");
  }
  if (std::none_of(selected.begin(), selected.end(),
                   [](std::uint8_t s) { return s != 0; })) {
    throw EmptySelectionError("proxy perception needs a selected UAV");
  }
  const BevSpec& spec = scenario.config.bev;
  BevGrid fused(spec);
  for (std::size_t u = 0; u < U; ++u) {
    if (!selected[u]) continue;
    const UavPose& pose = scenario.uavs[u];
    const DenseImage view = render_view(scenario, pose, frame);
    std::span<const std::uint8_t> mask;
    if (!masks.empty()) mask = masks[u];
    fused += project_view_to_bev(view, pose.camera, pose.extrinsics(), spec, mask);
  }
  return labels_from_bev(fused);
}

FrameMetrics evaluate_frame(std::size_t frame, const LabeledBev& pred,
                            const LabeledBev& gt) {
  FrameMetrics m;
  m.frame = frame;
  m.iou = iou_semantic(pred, gt);
  m.pq = panoptic_quality(match_instances(pred, gt));
  return m;
}

void write_metrics_header(std::ostream& os) {
  os << "frame,iou,pq,sq,rq,tp,fp,fn\n";
}

void write_metrics_row(std::ostream& os, const FrameMetrics& m) {
  const auto old = os.precision(17);
  os << m.frame << ',' << m.iou << ',' << m.pq.pq << ',' << m.pq.sq << ','
     << m.pq.rq << ',' << m.pq.tp << ',' << m.pq.fp << ',' << m.pq.fn << '\n';
  os.precision(old);
}

}  // namespace coperc
