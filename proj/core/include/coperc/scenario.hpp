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

#ifndef COPERC_SCENARIO_HPP
#define COPERC_SCENARIO_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "coperc/camera_geometry.hpp"
#include "coperc/image.hpp"
#include "coperc/labeled_bev.hpp"

namespace coperc {

// Scene parameters. World (LiDAR) frame: origin at the area centre, z up,
// ground plane z = 0. Images are image_rows x image_cols (X x Y).
struct ScenarioConfig {
  double area_x = 100.0;
  double area_y = 100.0;
  std::size_t num_uavs = 4;
  double uav_altitude = 50.0;
  double uav_radius = 35.0;      // horizontal distance of each UAV from centre
  double look_inward = 0.6;      // 0 = nadir, 1 = boresight at area centre
  std::size_t num_vehicles = 12;
  double vehicle_length = 4.5;
  double vehicle_width = 1.8;
  double max_speed = 6.0;        // m/s; 0 gives a static scene
  double min_gap = 1.0;          // clearance between vehicles, m
  double frame_rate = 2.0;       // Hz
  std::size_t frames = 7;
  std::size_t input_frames = 3;
  std::size_t image_rows = 56;
  std::size_t image_cols = 120;
  double focal_px = 60.0;
  double ground_contrast = 0.0;  // amplitude of the road-surface texture
  BevSpec bev;
  std::uint64_t seed = 1;

  void validate() const;
  double frame_interval() const { return 1.0 / frame_rate; }

  bool operator==(const ScenarioConfig&) const = default;
};

// Axis-aligned rectangle, half-open: [x0, x1) x [y0, y1).
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  bool contains(double x, double y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_y() const { return 0.5 * (y0 + y1); }

  bool operator==(const Rect&) const = default;
};

struct Velocity {
  double vx = 0.0;
  double vy = 0.0;
  bool operator==(const Velocity&) const = default;
};

struct VehicleTrack {
  std::int32_t id = 0;
  std::vector<Rect> footprint;      // one per frame
  std::vector<Velocity> velocity;   // one per frame

  bool operator==(const VehicleTrack&) const = default;
};

struct UavPose {
  Vec3 position = Vec3::Zero();
  Mat3 orientation = Mat3::Identity();  // camera axes in world coordinates
  CameraIntrinsics camera;

  CameraExtrinsics extrinsics() const { return {orientation, position}; }

  bool operator==(const UavPose& o) const {
    return position == o.position && orientation == o.orientation &&
           camera == o.camera;
  }
};

struct Scenario {
  ScenarioConfig config;
  std::vector<VehicleTrack> vehicles;
  std::vector<UavPose> uavs;
  std::vector<LabeledBev> ground_truth;  // one per frame

  bool operator==(const Scenario&) const = default;
};

// Cells of the BEV grid that overlap the rectangle with positive area. A
// point p inside the rectangle always lifts to one of these cells.
std::vector<std::uint32_t> rasterize_rect(const Rect& rect,
                                          const BevSpec& bev);

std::vector<UavPose> default_uav_poses(const ScenarioConfig& cfg);

// Assembles a scenario from explicit tracks and poses and computes the
// ground-truth labels. Throws ConfigError on inconsistent input.
Scenario make_scenario(const ScenarioConfig& cfg,
                       std::vector<VehicleTrack> vehicles,
                       std::vector<UavPose> uavs);

// Constant-velocity track starting from `start` (frame 0).
VehicleTrack make_track(std::int32_t id, const Rect& start, Velocity v,
                        const ScenarioConfig& cfg);

// Deterministic function of (cfg, cfg.seed).
Scenario generate_scenario(const ScenarioConfig& cfg);

// Per-pixel instance ids plus three 8-bit-quantised colour channels.
DenseImage render_view(const Scenario& scenario, const UavPose& uav,
                       std::size_t frame);

inline constexpr int kScenarioSchemaVersion = 1;

void save_scenario(const Scenario& scenario,
                   const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

nlohmann::json scenario_config_to_json(const ScenarioConfig& cfg);
// Strict: unknown keys raise ConfigError. Missing keys keep defaults.
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);

nlohmann::json bev_spec_to_json(const BevSpec& spec);
BevSpec bev_spec_from_json(const nlohmann::json& j);

}  // namespace coperc

#endif  // COPERC_SCENARIO_HPP
