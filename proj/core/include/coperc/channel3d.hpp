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

#ifndef COPERC_CHANNEL3D_HPP
#define COPERC_CHANNEL3D_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "coperc/common.hpp"

namespace coperc {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

struct Scenario;

// One propagation path. Angles are measured in the local frame of the array:
// elevation from the array boresight, azimuth around it from the local x axis.
struct PathParams {
  Complex gain{0.0, 0.0};
  double delay = 0.0;    // s
  double doppler = 0.0;  // Hz
  double aoa_az = 0.0;
  double aoa_el = 0.0;
  double aod_az = 0.0;
  double aod_el = 0.0;
  // Co-phase between the two polarisation sub-arrays (dual-pol arrays only).
  double rx_pol_phase = 0.0;
  double tx_pol_phase = 0.0;

  void validate() const;
};

// Uniform planar array. `spacing` is the element pitch in metres.
struct ArrayGeometry {
  std::size_t nx = 1;
  std::size_t ny = 1;
  double spacing = 0.5 * kSpeedOfLight / 3.5e9;
  std::size_t polarizations = 1;  // 1 or 2

  void validate() const;
  std::size_t elements_per_pol() const { return nx * ny; }
  std::size_t elements() const { return polarizations * nx * ny; }

  bool operator==(const ArrayGeometry&) const = default;
};

// Orientation of an array panel in the world frame.
struct ArrayFrame {
  Eigen::Vector3d boresight = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d x_axis = Eigen::Vector3d::UnitX();
};

struct Angles {
  double az = 0.0;
  double el = 0.0;
};

// Azimuth/elevation of a world-frame direction seen from an array panel.
Angles direction_to_angles(const Eigen::Vector3d& dir, const ArrayFrame& frame);

// Single-polarisation UPA response a_x (x) a_y, length nx * ny, unit norm.
CVector array_response(const ArrayGeometry& geom, double az, double el,
                       double wavelength);

// Full-array response. Dual-pol arrays stack [a; e^{j pol_phase} a] / sqrt(2).
CVector polarized_response(const ArrayGeometry& geom, double az, double el,
                           double wavelength, double pol_phase);

// rho e^{j 2 pi nu t} e^{-j 2 pi f tau} a_r a_t^H  (rx.elements() x tx.elements())
CMatrix path_component(const PathParams& p, const ArrayGeometry& tx,
                       const ArrayGeometry& rx, double t, double f,
                       double wavelength);

// sqrt(k/(k+1)) los + sqrt(1/(k+1)) sum(nlos). Throws RangeError for k < 0.
CMatrix rician_mix(const CMatrix& los, std::span<const CMatrix> nlos,
                   double k_factor);

struct ChannelConfig {
  double carrier_hz = 3.5e9;
  std::size_t subcarriers = 72;
  double subcarrier_spacing_hz = 15e3;
  std::size_t symbols = 2;
  std::size_t nlos_paths = 8;
  double rician_k = 10.0;           // linear
  double nlos_power = 1.0;          // total power of the scattered paths
  double max_excess_delay = 1e-6;   // s
  double max_doppler = 50.0;        // Hz
  bool free_space_loss = false;
  ArrayGeometry uav_array{2, 1, 0.5 * kSpeedOfLight / 3.5e9, 2};
  ArrayGeometry bs_array{2, 2, 0.5 * kSpeedOfLight / 3.5e9, 2};
  Eigen::Vector3d bs_position{0.0, -70.0, 25.0};
  Eigen::Vector3d bs_boresight{0.0, 1.0, 0.0};  // horizontal

  void validate() const;
  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  double bandwidth_hz() const {
    return static_cast<double>(subcarriers) * subcarrier_spacing_hz;
  }

  bool operator==(const ChannelConfig&) const = default;
};

ArrayFrame bs_frame(const ChannelConfig& cfg);
ArrayFrame uav_frame();  // nadir-facing panel

// H[u][k][s], each bs_array.elements() x uav_array.elements().
struct ChannelRealization {
  std::size_t uavs = 0;
  std::size_t subcarriers = 0;
  std::size_t symbols = 0;
  std::size_t rx = 0;
  std::size_t tx = 0;
  double carrier_hz = 0.0;
  double subcarrier_spacing_hz = 0.0;
  std::vector<CMatrix> h;
  std::vector<PathParams> los;  // one per UAV

  const CMatrix& at(std::size_t u, std::size_t k, std::size_t s) const {
    return h[(u * subcarriers + k) * symbols + s];
  }
  CMatrix& at(std::size_t u, std::size_t k, std::size_t s) {
    return h[(u * subcarriers + k) * symbols + s];
  }
  // Average of H[u][k][s] over the time-frequency grid.
  CMatrix mean_channel(std::size_t u) const;
};

// LoS path between a UAV at `uav_pos` and the base station.
PathParams los_path(const Eigen::Vector3d& uav_pos, const ChannelConfig& cfg);

ChannelRealization realize_channel(std::span<const Eigen::Vector3d> uav_positions,
                                   const ChannelConfig& cfg, std::uint64_t seed,
                                   std::uint64_t stream_index = 0);
ChannelRealization realize_channel(const Scenario& scenario,
                                   const ChannelConfig& cfg, std::uint64_t seed,
                                   std::uint64_t stream_index = 0);

// Writes channel_u<u>.bin (K*S*rx*tx interleaved little-endian re/im doubles,
// order k, s, row, column) plus channel.json describing the layout.
void export_channel(const ChannelRealization& ch, const ChannelConfig& cfg,
                    const std::filesystem::path& dir);

nlohmann::json channel_config_to_json(const ChannelConfig& cfg);
ChannelConfig channel_config_from_json(const nlohmann::json& j);

}  // namespace coperc

#endif  // COPERC_CHANNEL3D_HPP
