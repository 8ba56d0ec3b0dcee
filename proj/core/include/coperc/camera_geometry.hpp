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

#ifndef COPERC_CAMERA_GEOMETRY_HPP
#define COPERC_CAMERA_GEOMETRY_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "coperc/image.hpp"

namespace coperc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

struct PixelCoord {
  double i = 0.0;
  double j = 0.0;
};

// Pinhole intrinsics. f_x scales the i pixel axis, f_y the j axis.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double ic = 0.0;
  double jc = 0.0;

  void validate() const;
  Mat3 matrix() const;
  Mat3 inverse_matrix() const;
  // Projects a camera-frame point (Z_c > 0) back onto the pixel plane.
  PixelCoord project(const Vec3& p_cam) const;

  bool operator==(const CameraIntrinsics&) const = default;
};

// Camera -> LiDAR (world) rigid transform: p_lidar = R_E p_cam + T_E.
struct CameraExtrinsics {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  void validate() const;
  Mat4 matrix() const;
  CameraExtrinsics inverse() const;

  bool operator==(const CameraExtrinsics& o) const {
    return rotation == o.rotation && translation == o.translation;
  }
};

// Proper rotation whose third column (camera boresight) points from
// `position` toward `target`. The camera i axis is the projection of `hint`
// onto the image plane.
Mat3 look_at_rotation(const Vec3& position, const Vec3& target,
                      const Vec3& hint = Vec3::UnitX());

// Rectangular BEV plane on the LiDAR frame. w indexes X_lidar, h indexes
// Y_lidar; cell (w, h) has linear index h * width() + w.
struct BevSpec {
  double h_min = -50.0;
  double h_max = 50.0;
  double w_min = -50.0;
  double w_max = 50.0;
  double dh = 0.5;
  double dw = 0.5;

  void validate() const;
  std::size_t width() const;   // W_bev
  std::size_t height() const;  // H_bev
  std::size_t cell_count() const { return width() * height(); }

  // Unclamped floor assignment of a coordinate to a cell index.
  long cell_w(double x) const;
  long cell_h(double y) const;

  std::size_t index(std::size_t w, std::size_t h) const {
    return h * width() + w;
  }

  bool operator==(const BevSpec&) const = default;
};

struct BevCell {
  std::size_t w = 0;
  std::size_t h = 0;
  bool operator==(const BevCell&) const = default;
};

enum class LiftStatus { kCell, kOutsideGrid, kDegenerate };

struct LiftResult {
  LiftStatus status = LiftStatus::kDegenerate;
  BevCell cell;
  Vec3 point = Vec3::Zero();  // ground intersection, unset when degenerate

  bool ok() const { return status == LiftStatus::kCell; }
};

// (X_c/Z_c, Y_c/Z_c, 1) for a pixel.
Vec3 pixel_to_ray(const CameraIntrinsics& intr, PixelCoord pixel);

Vec3 camera_to_lidar(const CameraExtrinsics& extr, const Vec3& p_cam);

// Intersects the pixel ray with the plane z = ground_z. Returns kDegenerate
// when the ray is parallel to the plane or the hit lies behind the camera.
LiftResult intersect_ground(const CameraIntrinsics& intr,
                            const CameraExtrinsics& extr, PixelCoord pixel,
                            double ground_z);

LiftResult lift_pixel_to_bev(const CameraIntrinsics& intr,
                             const CameraExtrinsics& extr, PixelCoord pixel,
                             double ground_z, const BevSpec& bev);

// Per-cell occupancy count plus the set of instance ids that landed there.
class BevGrid {
 public:
  BevGrid() = default;
  explicit BevGrid(const BevSpec& spec);

  const BevSpec& spec() const noexcept { return spec_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }

  void add(std::size_t w, std::size_t h, std::int32_t id,
           std::uint32_t count = 1);

  std::uint32_t count(std::size_t w, std::size_t h) const {
    return counts_[spec_.index(w, h)];
  }
  std::vector<std::int32_t> ids(std::size_t w, std::size_t h) const;

  const std::vector<std::uint32_t>& counts() const noexcept { return counts_; }
  // Sorted, unique (cell index, id) pairs.
  const std::vector<std::pair<std::uint32_t, std::int32_t>>& id_entries()
      const noexcept {
    return entries_;
  }

  std::size_t occupied_cells() const;
  bool empty() const { return occupied_cells() == 0; }

  // Element-wise sum of counts and union of id sets.
  BevGrid& operator+=(const BevGrid& other);

  // Dense export, one row per cell: w,h,count,ids (ids ';'-separated).
  void write_csv(std::ostream& os) const;

  bool operator==(const BevGrid& o) const {
    return spec_ == o.spec_ && counts_ == o.counts_ && entries_ == o.entries_;
  }

 private:
  BevSpec spec_;
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint32_t> counts_;
  std::vector<std::pair<std::uint32_t, std::int32_t>> entries_;
};

struct ProjectionDiagnostics {
  std::size_t degenerate = 0;
  std::size_t outside_grid = 0;
  std::size_t lifted = 0;
};

// Lifts every foreground pixel of `image` (instance id != 0, and mask true
// when a mask is given) onto the ground plane and accumulates it on the grid.
BevGrid project_view_to_bev(const DenseImage& image,
                            const CameraIntrinsics& intr,
                            const CameraExtrinsics& extr, const BevSpec& bev,
                            std::span<const std::uint8_t> mask = {},
                            ProjectionDiagnostics* diagnostics = nullptr,
                            double ground_z = 0.0);

// Throws SpecMismatchError when the grids disagree on their BevSpec. An
// empty span yields a default-constructed grid.
BevGrid fuse_bev(std::span<const BevGrid> grids);

}  // namespace coperc

#endif  // COPERC_CAMERA_GEOMETRY_HPP
