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

#include "coperc/camera_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "coperc/common.hpp"

namespace coperc {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw ConfigError("camera focal lengths must be positive");
  }
  if (!std::isfinite(ic) || !std::isfinite(jc)) {
    throw ConfigError("camera principal point must be finite");
  }
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, ic,  //
      0.0, fy, jc,   //
      0.0, 0.0, 1.0;
  return k;
}

Mat3 CameraIntrinsics::inverse_matrix() const {
  Mat3 k_inv;
  k_inv << 1.0 / fx, 0.0, -ic / fx,  //
      0.0, 1.0 / fy, -jc / fy,       //
      0.0, 0.0, 1.0;
  return k_inv;
}

PixelCoord CameraIntrinsics::project(const Vec3& p_cam) const {
  return {fx * p_cam.x() / p_cam.z() + ic, fy * p_cam.y() / p_cam.z() + jc};
}

void CameraExtrinsics::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw ConfigError("camera extrinsics must be finite");
  }
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (ortho > 1e-9 || std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw ConfigError("camera rotation must be a proper rotation");
  }
}

Mat4 CameraExtrinsics::matrix() const {
  Mat4 e = Mat4::Identity();
  e.topLeftCorner<3, 3>() = rotation;
  e.topRightCorner<3, 1>() = translation;
  return e;
}

CameraExtrinsics CameraExtrinsics::inverse() const {
  CameraExtrinsics inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Mat3 look_at_rotation(const Vec3& position, const Vec3& target,
                      const Vec3& hint) {
  const Vec3 z = (target - position).normalized();
  Vec3 x = hint - hint.dot(z) * z;
  if (x.norm() < 1e-9) {
    // hint parallel to boresight; fall back to another world axis.
    const Vec3 alt = std::abs(z.y()) < 0.9 ? Vec3::UnitY() : Vec3::UnitZ();
    x = alt - alt.dot(z) * z;
  }
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

void BevSpec::validate() const {
  if (!(dh > 0.0) || !(dw > 0.0)) {
    throw ConfigError("BEV resolution must be positive");
  }
  if (!(h_max > h_min) || !(w_max > w_min)) {
    throw ConfigError("BEV extent must be non-empty");
  }
  if (width() < 1 || height() < 1) {
    throw ConfigError("BEV grid must have at least one cell per axis");
  }
}

std::size_t BevSpec::width() const {
  const double n = std::floor((w_max - w_min) / dw);
  return n > 0.0 ? static_cast<std::size_t>(n) : 0;
}

std::size_t BevSpec::height() const {
  const double n = std::floor((h_max - h_min) / dh);
  return n > 0.0 ? static_cast<std::size_t>(n) : 0;
}

namespace {

// floor((v - lo) / step), except that a value inside the last cell whose
// quotient rounds up to `count` stays in cell count - 1.
long floor_cell(double v, double lo, double step, std::size_t count) {
  const long c = static_cast<long>(std::floor((v - lo) / step));
  const long n = static_cast<long>(count);
  if (c >= n && v < lo + static_cast<double>(count) * step) return n - 1;
  return c;
}

}  // namespace

long BevSpec::cell_w(double x) const { return floor_cell(x, w_min, dw, width()); }

long BevSpec::cell_h(double y) const { return floor_cell(y, h_min, dh, height()); }

Vec3 pixel_to_ray(const CameraIntrinsics& intr, PixelCoord pixel) {
  return {(pixel.i - intr.ic) / intr.fx, (pixel.j - intr.jc) / intr.fy, 1.0};
}

Vec3 camera_to_lidar(const CameraExtrinsics& extr, const Vec3& p_cam) {
  return extr.rotation * p_cam + extr.translation;
}

LiftResult intersect_ground(const CameraIntrinsics& intr,
                            const CameraExtrinsics& extr, PixelCoord pixel,
                            double ground_z) {
  LiftResult out;
  const Vec3 ray = pixel_to_ray(intr, pixel);
  const Vec3 dir = extr.rotation * ray;
  constexpr double kParallelEps = 1e-12;
  if (std::abs(dir.z()) < kParallelEps) {
    return out;
  }
  // Depth Z_c along the camera axis at which the ray meets the plane.
  const double depth = (ground_z - extr.translation.z()) / dir.z();
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    return out;
  }
  out.point = camera_to_lidar(extr, depth * ray);
  out.point.z() = ground_z;
  out.status = LiftStatus::kOutsideGrid;
  return out;
}

LiftResult lift_pixel_to_bev(const CameraIntrinsics& intr,
                             const CameraExtrinsics& extr, PixelCoord pixel,
                             double ground_z, const BevSpec& bev) {
  LiftResult out = intersect_ground(intr, extr, pixel, ground_z);
  if (out.status == LiftStatus::kDegenerate) {
    return out;
  }
  const double x = out.point.x();
  const double y = out.point.y();
  if (!(x >= bev.w_min && x < bev.w_max && y >= bev.h_min && y < bev.h_max)) {
    out.status = LiftStatus::kOutsideGrid;
    return out;
  }
  const long w = bev.cell_w(x);
  const long h = bev.cell_h(y);
  if (w < 0 || h < 0 || static_cast<std::size_t>(w) >= bev.width() ||
      static_cast<std::size_t>(h) >= bev.height()) {
    // Extent not an integer multiple of the resolution: the remainder strip
    // lies outside the grid.
    out.status = LiftStatus::kOutsideGrid;
    return out;
  }
  out.cell = {static_cast<std::size_t>(w), static_cast<std::size_t>(h)};
  out.status = LiftStatus::kCell;
  return out;
}

BevGrid::BevGrid(const BevSpec& spec)
    : spec_(spec),
      width_(spec.width()),
      height_(spec.height()),
      counts_(width_ * height_, 0) {}

void BevGrid::add(std::size_t w, std::size_t h, std::int32_t id,
                  std::uint32_t count) {
  if (w >= width_ || h >= height_) {
    throw RangeError("BEV cell index out of range");
  }
  const auto cell = static_cast<std::uint32_t>(spec_.index(w, h));
  counts_[cell] += count;
  const std::pair<std::uint32_t, std::int32_t> entry{cell, id};
  auto it = std::lower_bound(entries_.begin(), entries_.end(), entry);
  if (it == entries_.end() || *it != entry) {
    entries_.insert(it, entry);
  }
}

std::vector<std::int32_t> BevGrid::ids(std::size_t w, std::size_t h) const {
  const auto cell = static_cast<std::uint32_t>(spec_.index(w, h));
  auto lo = std::lower_bound(
      entries_.begin(), entries_.end(),
      std::pair<std::uint32_t, std::int32_t>{cell, INT32_MIN});
  std::vector<std::int32_t> out;
  for (; lo != entries_.end() && lo->first == cell; ++lo) {
    out.push_back(lo->second);
  }
  return out;
}

std::size_t BevGrid::occupied_cells() const {
  return static_cast<std::size_t>(
      std::count_if(counts_.begin(), counts_.end(),
                    [](std::uint32_t c) { return c > 0; }));
}

BevGrid& BevGrid::operator+=(const BevGrid& other) {
  if (!(spec_ == other.spec_)) {
    throw SpecMismatchError("cannot fuse BEV grids with different specs");
  }
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    counts_[k] += other.counts_[k];
  }
  std::vector<std::pair<std::uint32_t, std::int32_t>> merged;
  merged.reserve(entries_.size() + other.entries_.size());
  std::set_union(entries_.begin(), entries_.end(), other.entries_.begin(),
                 other.entries_.end(), std::back_inserter(merged));
  entries_ = std::move(merged);
  return *this;
}

void BevGrid::write_csv(std::ostream& os) const {
  os << "w,h,count,ids\n";
  auto it = entries_.begin();
  for (std::size_t h = 0; h < height_; ++h) {
    for (std::size_t w = 0; w < width_; ++w) {
      const auto cell = static_cast<std::uint32_t>(spec_.index(w, h));
      os << w << ',' << h << ',' << counts_[cell] << ',';
      bool first = true;
      while (it != entries_.end() && it->first < cell) ++it;
      for (; it != entries_.end() && it->first == cell; ++it) {
        if (!first) os << ';';
        os << it->second;
        first = false;
      }
      os << '\n';
    }
  }
}

BevGrid project_view_to_bev(const DenseImage& image,
                            const CameraIntrinsics& intr,
                            const CameraExtrinsics& extr, const BevSpec& bev,
                            std::span<const std::uint8_t> mask,
                            ProjectionDiagnostics* diagnostics,
                            double ground_z) {
  if (!image.has_instance_ids()) {
    throw ShapeError("projection needs an image with instance ids");
  }
  if (!mask.empty() && mask.size() != image.pixel_count()) {
    throw ShapeError("mask size does not match image");
  }
  BevGrid grid(bev);
  ProjectionDiagnostics diag;
  const auto& ids = image.instance_ids();
  for (std::size_t i = 0; i < image.rows(); ++i) {
    for (std::size_t j = 0; j < image.cols(); ++j) {
      const std::size_t p = image.pixel_index(i, j);
      if (ids[p] == 0 || (!mask.empty() && !mask[p])) continue;
      const LiftResult r =
          lift_pixel_to_bev(intr, extr,
                            {static_cast<double>(i), static_cast<double>(j)},
                            ground_z, bev);
      switch (r.status) {
        case LiftStatus::kCell:
          grid.add(r.cell.w, r.cell.h, ids[p]);
          ++diag.lifted;
          break;
        case LiftStatus::kOutsideGrid:
          ++diag.outside_grid;
          break;
        case LiftStatus::kDegenerate:
          ++diag.degenerate;
          break;
      }
    }
  }
  if (diagnostics) *diagnostics = diag;
  return grid;
}

BevGrid fuse_bev(std::span<const BevGrid> grids) {
  if (grids.empty()) return BevGrid{};
  BevGrid out = grids.front();
  for (std::size_t k = 1; k < grids.size(); ++k) {
    out += grids[k];
  }
  return out;
}

}  // namespace coperc
