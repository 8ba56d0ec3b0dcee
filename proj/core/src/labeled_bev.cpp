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

#include "coperc/labeled_bev.hpp"

#include <algorithm>
#include <string>

#include "coperc/common.hpp"

namespace coperc {

LabeledBev LabeledBev::from_instances(const BevSpec& spec,
                                      std::vector<BevInstance> instances) {
  LabeledBev out = empty(spec);
  for (auto& inst : instances) {
    std::sort(inst.cells.begin(), inst.cells.end());
    inst.cells.erase(std::unique(inst.cells.begin(), inst.cells.end()),
                     inst.cells.end());
    for (std::uint32_t c : inst.cells) {
      if (c >= out.semantic.size()) {
        throw RangeError("instance cell outside the BEV grid");
      }
      if (out.semantic[c]) {
        throw ConfigError("instance " + std::to_string(inst.id) +
                          " overlaps another instance in BEV cell " +
                          std::to_string(c));
      }
      out.semantic[c] = 1;
    }
  }
  out.instances = std::move(instances);
  return out;
}

LabeledBev LabeledBev::empty(const BevSpec& spec) {
  LabeledBev out;
  out.spec = spec;
  out.semantic.assign(spec.cell_count(), 0);
  return out;
}

std::size_t LabeledBev::vehicle_cells() const {
  return static_cast<std::size_t>(
      std::count(semantic.begin(), semantic.end(), std::uint8_t{1}));
}

void LabeledBev::validate() const {
  std::vector<std::uint8_t> seen(semantic.size(), 0);
  for (const auto& inst : instances) {
    for (std::uint32_t c : inst.cells) {
      if (c >= seen.size() || seen[c]) {
        throw ConfigError("instance cell sets must be disjoint and in range");
      }
      seen[c] = 1;
    }
  }
  if (seen != semantic) {
    throw ConfigError("semantic mask must equal the union of instances");
  }
}

}  // namespace coperc
