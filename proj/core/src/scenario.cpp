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

#include "coperc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iterator>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "coperc/common.hpp"
#include "json_util.hpp"

namespace coperc {
namespace {

constexpr double kTrackTolerance = 1e-9;

double hash01(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t x = a * 0x9E3779B97F4A7C15ull ^ (b + 0x632BE59BD9B4E019ull) ^
                    (c * 0xC2B2AE3D27D4EB4Full);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  x ^= x >> 31;
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

double quantize8(double v) {
  const double q = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
  return q / 255.0;
}

bool overlaps(const Rect& a, const Rect& b, double gap) {
  return a.x0 < b.x1 + gap && b.x0 < a.x1 + gap && a.y0 < b.y1 + gap &&
         b.y0 < a.y1 + gap;
}

std::uint64_t to_bits(double v) {
  std::uint64_t u;
  static_assert(sizeof(u) == sizeof(v));
  std::memcpy(&u, &v, sizeof(u));
  return u;
}

void validate_track(const VehicleTrack& t, const ScenarioConfig& cfg) {
  if (t.id < 1) {
    throw ConfigError("vehicle ids start at 1");
  }
  if (t.footprint.size() != cfg.frames || t.velocity.size() != cfg.frames) {
    throw ConfigError("vehicle " + std::to_string(t.id) +
                      " must have one footprint and velocity per frame");
  }
  const double hx = 0.5 * cfg.area_x;
  const double hy = 0.5 * cfg.area_y;
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    const Rect& r = t.footprint[f];
    if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) {
      throw ConfigError("vehicle footprint must have positive area");
    }
    if (r.x0 < -hx || r.x1 > hx || r.y0 < -hy || r.y1 > hy) {
      throw ConfigError("vehicle " + std::to_string(t.id) +
                        " leaves the scenario area");
    }
    if (f + 1 < cfg.frames) {
      const Rect& n = t.footprint[f + 1];
      const double dt = cfg.frame_interval();
      const double ex = n.center_x() - r.center_x() - t.velocity[f].vx * dt;
      const double ey = n.center_y() - r.center_y() - t.velocity[f].vy * dt;
      if (std::abs(ex) > kTrackTolerance || std::abs(ey) > kTrackTolerance) {
        throw ConfigError("vehicle " + std::to_string(t.id) +
                          " moves inconsistently with its velocity");
      }
    }
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  if (num_uavs < 1) throw ConfigError("scenario: num_uavs must be >= 1");
  if (frames < 1) throw ConfigError("scenario: frames must be >= 1");
  if (input_frames > frames) {
    throw ConfigError("scenario: input_frames must not exceed frames");
  }
  if (!(area_x > 0.0) || !(area_y > 0.0)) {
    throw ConfigError("scenario: area extent must be positive");
  }
  if (num_vehicles < 1) {
    throw ConfigError("scenario: at least one vehicle is required");
  }
  if (!(uav_altitude > 0.0)) {
    throw ConfigError("scenario: uav_altitude must be positive");
  }
  if (!(frame_rate > 0.0)) {
    throw ConfigError("scenario: frame_rate must be positive");
  }
  if (!(vehicle_length > 0.0) || !(vehicle_width > 0.0) ||
      vehicle_length >= std::min(area_x, area_y)) {
    throw ConfigError("scenario: vehicle size must fit inside the area");
  }
  if (max_speed < 0.0 || min_gap < 0.0) {
    throw ConfigError("scenario: max_speed and min_gap must be >= 0");
  }
  if (image_rows < 1 || image_cols < 1 || !(focal_px > 0.0)) {
    throw ConfigError("scenario: image size and focal length must be >= 1");
  }
  if (look_inward < 0.0 || look_inward > 1.0) {
    throw ConfigError("scenario: look_inward must lie in [0, 1]");
  }
  if (ground_contrast < 0.0 || ground_contrast > 0.5) {
    throw ConfigError("scenario: ground_contrast must lie in [0, 0.5]");
  }
  bev.validate();
}

std::vector<std::uint32_t> rasterize_rect(const Rect& rect,
                                          const BevSpec& bev) {
  std::vector<std::uint32_t> cells;
  const long width = static_cast<long>(bev.width());
  const long height = static_cast<long>(bev.height());
  // Cell w overlaps [x0, x1) with positive length iff floor(q0) <= w < ceil(q1),
  // q = (x - w_min) / dw.
  const long w0 = std::max(0L, static_cast<long>(std::floor((rect.x0 - bev.w_min) / bev.dw)));
  const long w1 = std::min(width - 1,
                           static_cast<long>(std::ceil((rect.x1 - bev.w_min) / bev.dw)) - 1);
  const long h0 = std::max(0L, static_cast<long>(std::floor((rect.y0 - bev.h_min) / bev.dh)));
  const long h1 = std::min(height - 1,
                           static_cast<long>(std::ceil((rect.y1 - bev.h_min) / bev.dh)) - 1);
  for (long h = h0; h <= h1; ++h) {
    for (long w = w0; w <= w1; ++w) {
      cells.push_back(static_cast<std::uint32_t>(
          bev.index(static_cast<std::size_t>(w), static_cast<std::size_t>(h))));
    }
  }
  std::sort(cells.begin(), cells.end());
  return cells;
}

std::vector<UavPose> default_uav_poses(const ScenarioConfig& cfg) {
  std::vector<UavPose> poses;
  poses.reserve(cfg.num_uavs);
  const double n = static_cast<double>(cfg.num_uavs);
  for (std::size_t u = 0; u < cfg.num_uavs; ++u) {
    const double angle = kPi / 4.0 + 2.0 * kPi * static_cast<double>(u) / n;
    UavPose pose;
    pose.position = {cfg.uav_radius * std::cos(angle),
                     cfg.uav_radius * std::sin(angle), cfg.uav_altitude};
    const Vec3 target{(1.0 - cfg.look_inward) * pose.position.x(),
                      (1.0 - cfg.look_inward) * pose.position.y(), 0.0};
    Vec3 inward{-std::cos(angle), -std::sin(angle), 0.0};
    pose.orientation = look_at_rotation(pose.position, target, inward);
    pose.camera.fx = cfg.focal_px;
    pose.camera.fy = cfg.focal_px;
    pose.camera.ic = 0.5 * static_cast<double>(cfg.image_rows - 1);
    pose.camera.jc = 0.5 * static_cast<double>(cfg.image_cols - 1);
    poses.push_back(pose);
  }
  return poses;
}

VehicleTrack make_track(std::int32_t id, const Rect& start, Velocity v,
                        const ScenarioConfig& cfg) {
  VehicleTrack t;
  t.id = id;
  const double dt = cfg.frame_interval();
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    const double s = static_cast<double>(f) * dt;
    t.footprint.push_back({start.x0 + v.vx * s, start.y0 + v.vy * s,
                           start.x1 + v.vx * s, start.y1 + v.vy * s});
    t.velocity.push_back(v);
  }
  return t;
}

Scenario make_scenario(const ScenarioConfig& cfg,
                       std::vector<VehicleTrack> vehicles,
                       std::vector<UavPose> uavs) {
  cfg.validate();
  if (vehicles.empty()) {
    throw ConfigError("scenario: at least one vehicle is required");
  }
  if (uavs.size() != cfg.num_uavs) {
    throw ConfigError("scenario: expected one pose per UAV");
  }
  for (const auto& t : vehicles) validate_track(t, cfg);
  for (const auto& p : uavs) {
    p.camera.validate();
    p.extrinsics().validate();
    if (std::abs(p.position.z() - cfg.uav_altitude) > 1e-9) {
      throw ConfigError("scenario: UAV altitude differs from uav_altitude");
    }
  }

  Scenario s;
  s.config = cfg;
  s.vehicles = std::move(vehicles);
  s.uavs = std::move(uavs);
  s.ground_truth.reserve(cfg.frames);
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    std::vector<BevInstance> instances;
    for (const auto& t : s.vehicles) {
      auto cells = rasterize_rect(t.footprint[f], cfg.bev);
      if (!cells.empty()) instances.push_back({t.id, std::move(cells)});
    }
    s.ground_truth.push_back(
        LabeledBev::from_instances(cfg.bev, std::move(instances)));
  }
  return s;
}

Scenario generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed, "scenario");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double horizon =
      static_cast<double>(cfg.frames - 1) * cfg.frame_interval();

  std::vector<VehicleTrack> tracks;
  constexpr int kMaxAttempts = 5000;
  for (std::size_t k = 0; k < cfg.num_vehicles; ++k) {
    const auto id = static_cast<std::int32_t>(k + 1);
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const bool along_x = unit(rng) < 0.5;
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      const double speed = cfg.max_speed * unit(rng);
      const double hx = 0.5 * (along_x ? cfg.vehicle_length : cfg.vehicle_width);
      const double hy = 0.5 * (along_x ? cfg.vehicle_width : cfg.vehicle_length);
      const Velocity v{along_x ? sign * speed : 0.0,
                       along_x ? 0.0 : sign * speed};
      const double lim_x = 0.5 * cfg.area_x - hx;
      const double lim_y = 0.5 * cfg.area_y - hy;
      const double cx = -lim_x + 2.0 * lim_x * unit(rng);
      const double cy = -lim_y + 2.0 * lim_y * unit(rng);
      const double ex = cx + v.vx * horizon;
      const double ey = cy + v.vy * horizon;
      if (std::abs(ex) > lim_x || std::abs(ey) > lim_y) continue;

      VehicleTrack t =
          make_track(id, {cx - hx, cy - hy, cx + hx, cy + hy}, v, cfg);
      bool clear = true;
      for (const auto& other : tracks) {
        for (std::size_t f = 0; f < cfg.frames && clear; ++f) {
          clear = !overlaps(t.footprint[f], other.footprint[f], cfg.min_gap);
        }
        if (!clear) break;
      }
      if (!clear) continue;
      // Keep ground-truth instances disjoint on the BEV grid as well.
      for (std::size_t f = 0; f < cfg.frames && clear; ++f) {
        const auto mine = rasterize_rect(t.footprint[f], cfg.bev);
        for (const auto& other : tracks) {
          const auto theirs = rasterize_rect(other.footprint[f], cfg.bev);
          std::vector<std::uint32_t> common;
          std::set_intersection(mine.begin(), mine.end(), theirs.begin(),
                                theirs.end(), std::back_inserter(common));
          if (!common.empty()) {
            clear = false;
            break;
          }
        }
      }
      if (!clear) continue;
      tracks.push_back(std::move(t));
      placed = true;
    }
    if (!placed) {
      throw ConfigError("scenario: could not place " +
                        std::to_string(cfg.num_vehicles) +
                        " non-overlapping vehicles in the area");
    }
  }
  return make_scenario(cfg, std::move(tracks), default_uav_poses(cfg));
}

DenseImage render_view(const Scenario& scenario, const UavPose& uav,
                       std::size_t frame) {
  const auto& cfg = scenario.config;
  if (frame >= cfg.frames) {
    throw RangeError("render_view: frame " + std::to_string(frame) +
                     " out of range");
  }
  DenseImage img(cfg.image_rows, cfg.image_cols, 3);
  img.enable_instance_ids();
  const CameraExtrinsics extr = uav.extrinsics();
  for (std::size_t i = 0; i < cfg.image_rows; ++i) {
    for (std::size_t j = 0; j < cfg.image_cols; ++j) {
      const LiftResult hit = intersect_ground(
          uav.camera, extr, {static_cast<double>(i), static_cast<double>(j)},
          0.0);
      double rgb[3] = {0.85, 0.88, 0.92};  // sky
      std::int32_t id = 0;
      if (hit.status != LiftStatus::kDegenerate) {
        const double x = hit.point.x();
        const double y = hit.point.y();
        const VehicleTrack* found = nullptr;
        for (const auto& t : scenario.vehicles) {
          if (t.footprint[frame].contains(x, y)) {
            found = &t;
            break;
          }
        }
        if (found) {
          id = found->id;
          const Rect& r = found->footprint[frame];
          // Body-fixed texture so every view sees the same paint.
          const auto tu = static_cast<std::uint64_t>(std::floor((x - r.x0) / 0.5));
          const auto tv = static_cast<std::uint64_t>(std::floor((y - r.y0) / 0.5));
          const double shade = 0.45 + 0.55 * hash01(static_cast<std::uint64_t>(id), tu, tv);
          for (std::size_t c = 0; c < 3; ++c) {
            const double base = 0.5 + 0.5 * hash01(static_cast<std::uint64_t>(id), 977, c);
            rgb[c] = base * shade;
          }
        } else {
          // World-fixed road texture on 0.5 m tiles.
          const auto gu = static_cast<std::uint64_t>(std::floor(x / 0.5) + 1e6);
          const auto gv = static_cast<std::uint64_t>(std::floor(y / 0.5) + 1e6);
          const double g = 0.30 + 0.03 * std::sin(0.11 * x) * std::cos(0.07 * y) +
                           cfg.ground_contrast * (hash01(0, gu, gv) - 0.5);
          rgb[0] = g;
          rgb[1] = g + 0.01;
          rgb[2] = g + 0.02;
        }
      }
      for (std::size_t c = 0; c < 3; ++c) img.at(i, j, c) = quantize8(rgb[c]);
      img.instance_ids()[img.pixel_index(i, j)] = id;
    }
  }
  return img;
}

nlohmann::json bev_spec_to_json(const BevSpec& s) {
  return {{"h_min", s.h_min}, {"h_max", s.h_max}, {"w_min", s.w_min},
          {"w_max", s.w_max}, {"dh", s.dh},       {"dw", s.dw}};
}

BevSpec bev_spec_from_json(const nlohmann::json& j) {
  BevSpec s;
  detail::StrictObject o(j, "bev");
  o.read("h_min", s.h_min);
  o.read("h_max", s.h_max);
  o.read("w_min", s.w_min);
  o.read("w_max", s.w_max);
  o.read("dh", s.dh);
  o.read("dw", s.dw);
  o.finish();
  return s;
}

nlohmann::json scenario_config_to_json(const ScenarioConfig& c) {
  return {{"area_x", c.area_x},
          {"area_y", c.area_y},
          {"num_uavs", c.num_uavs},
          {"uav_altitude", c.uav_altitude},
          {"uav_radius", c.uav_radius},
          {"look_inward", c.look_inward},
          {"num_vehicles", c.num_vehicles},
          {"vehicle_length", c.vehicle_length},
          {"vehicle_width", c.vehicle_width},
          {"max_speed", c.max_speed},
          {"min_gap", c.min_gap},
          {"frame_rate", c.frame_rate},
          {"frames", c.frames},
          {"input_frames", c.input_frames},
          {"image_rows", c.image_rows},
          {"image_cols", c.image_cols},
          {"focal_px", c.focal_px},
          {"ground_contrast", c.ground_contrast},
          {"bev", bev_spec_to_json(c.bev)},
          {"seed", c.seed}};
}

ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  detail::StrictObject o(j, "scenario");
  o.read("area_x", c.area_x);
  o.read("area_y", c.area_y);
  o.read("num_uavs", c.num_uavs);
  o.read("uav_altitude", c.uav_altitude);
  o.read("uav_radius", c.uav_radius);
  o.read("look_inward", c.look_inward);
  o.read("num_vehicles", c.num_vehicles);
  o.read("vehicle_length", c.vehicle_length);
  o.read("vehicle_width", c.vehicle_width);
  o.read("max_speed", c.max_speed);
  o.read("min_gap", c.min_gap);
  o.read("frame_rate", c.frame_rate);
  o.read("frames", c.frames);
  o.read("input_frames", c.input_frames);
  o.read("image_rows", c.image_rows);
  o.read("image_cols", c.image_cols);
  o.read("focal_px", c.focal_px);
  o.read("ground_contrast", c.ground_contrast);
  if (const auto* b = o.child("bev")) c.bev = bev_spec_from_json(*b);
  o.read("seed", c.seed);
  o.finish();
  return c;
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "coperc.scenario";
  j["schema_version"] = kScenarioSchemaVersion;
  j["config"] = scenario_config_to_json(s.config);
  auto& vehicles = j["vehicles"] = nlohmann::json::array();
  for (const auto& t : s.vehicles) {
    nlohmann::json jt;
    jt["id"] = t.id;
    for (const auto& r : t.footprint) {
      jt["footprint"].push_back({r.x0, r.y0, r.x1, r.y1});
    }
    for (const auto& v : t.velocity) jt["velocity"].push_back({v.vx, v.vy});
    vehicles.push_back(std::move(jt));
  }
  auto& uavs = j["uavs"] = nlohmann::json::array();
  for (const auto& p : s.uavs) {
    nlohmann::json ju;
    ju["position"] = {p.position.x(), p.position.y(), p.position.z()};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) ju["orientation"].push_back(p.orientation(r, c));
    }
    ju["camera"] = {{"fx", p.camera.fx},
                    {"fy", p.camera.fy},
                    {"ic", p.camera.ic},
                    {"jc", p.camera.jc}};
    uavs.push_back(std::move(ju));
  }
  // Bit-exactness guard: a checksum over every double in the file.
  std::uint64_t checksum = 0;
  auto mix = [&](double v) { checksum = checksum * 1099511628211ull ^ to_bits(v); };
  for (const auto& t : s.vehicles) {
    for (const auto& r : t.footprint) {
      mix(r.x0); mix(r.y0); mix(r.x1); mix(r.y1);
    }
  }
  for (const auto& p : s.uavs) {
    for (int k = 0; k < 3; ++k) mix(p.position[k]);
  }
  j["checksum"] = checksum;

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write scenario file " + path.string());
  os << j.dump(1) << '\n';
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("scenario file not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed scenario file " + path.string() + ": " +
                     e.what());
  }
  if (!j.is_object() || j.value("format", "") != "coperc.scenario") {
    throw ParseError("not a coperc scenario file: " + path.string());
  }
  const int version = j.value("schema_version", -1);
  if (version != kScenarioSchemaVersion) {
    throw VersionError("scenario schema version " + std::to_string(version) +
                       " is not supported (expected " +
                       std::to_string(kScenarioSchemaVersion) + ")");
  }
  try {
    const ScenarioConfig cfg = scenario_config_from_json(j.at("config"));
    std::vector<VehicleTrack> tracks;
    for (const auto& jt : j.at("vehicles")) {
      VehicleTrack t;
      t.id = jt.at("id").get<std::int32_t>();
      for (const auto& r : jt.at("footprint")) {
        t.footprint.push_back({r.at(0).get<double>(), r.at(1).get<double>(),
                               r.at(2).get<double>(), r.at(3).get<double>()});
      }
      for (const auto& v : jt.at("velocity")) {
        t.velocity.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
      }
      tracks.push_back(std::move(t));
    }
    std::vector<UavPose> poses;
    for (const auto& ju : j.at("uavs")) {
      UavPose p;
      const auto& pos = ju.at("position");
      p.position = {pos.at(0).get<double>(), pos.at(1).get<double>(),
                    pos.at(2).get<double>()};
      const auto& o = ju.at("orientation");
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
          p.orientation(r, c) = o.at(static_cast<std::size_t>(3 * r + c)).get<double>();
        }
      }
      const auto& cam = ju.at("camera");
      p.camera = {cam.at("fx").get<double>(), cam.at("fy").get<double>(),
                  cam.at("ic").get<double>(), cam.at("jc").get<double>()};
      poses.push_back(p);
    }
    return make_scenario(cfg, std::move(tracks), std::move(poses));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed scenario file " + path.string() + ": " +
                     e.what());
  }
}

}  // namespace coperc
