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

#ifndef COPERC_LABELED_BEV_HPP
#define COPERC_LABELED_BEV_HPP

#include <cstdint>
#include <vector>

#include "coperc/camera_geometry.hpp"

namespace coperc {

struct BevInstance {
  std::int32_t id = 0;
  std::vector<std::uint32_t> cells;  // sorted linear cell indices

  bool operator==(const BevInstance&) const = default;
};

// Vehicle-class BEV labels: a binary semantic mask plus disjoint instances.
struct LabeledBev {
  BevSpec spec;
  std::vector<std::uint8_t> semantic;
  std::vector<BevInstance> instances;

  // Builds the semantic mask as the union of the instance cells. Throws
  // ConfigError when two instances claim the same cell.
  static LabeledBev from_instances(const BevSpec& spec,
                                   std::vector<BevInstance> instances);
  static LabeledBev empty(const BevSpec& spec);

  std::size_t vehicle_cells() const;
  void validate() const;

  bool operator==(const LabeledBev&) const = default;
};

}  // namespace coperc

#endif  // COPERC_LABELED_BEV_HPP
