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

#include <cmath>
#include <random>
#include <vector>

#include "coperc/camera_geometry.hpp"
#include "coperc/common.hpp"

using namespace coperc;

namespace {

CameraIntrinsics test_intrinsics() { return {60.0, 55.0, 27.5, 59.5}; }

// Independent scalar floor assignment.
bool scalar_cell(double x, double y, const BevSpec& b, long& w, long& h) {
  if (x < b.w_min || x >= b.w_max || y < b.h_min || y >= b.h_max) return false;
  w = static_cast<long>(std::floor((x - b.w_min) / b.dw));
  h = static_cast<long>(std::floor((y - b.h_min) / b.dh));
  return w < static_cast<long>(b.width()) && h < static_cast<long>(b.height());
}

CameraExtrinsics nadir_at(const Vec3& pos) {
  return {look_at_rotation(pos, {pos.x(), pos.y(), 0.0}), pos};
}

BevGrid random_grid(const BevSpec& spec, Rng& rng, int cells) {
  BevGrid g(spec);
  std::uniform_int_distribution<std::size_t> pw(0, g.width() - 1);
  std::uniform_int_distribution<std::size_t> ph(0, g.height() - 1);
  std::uniform_int_distribution<int> pid(1, 5);
  for (int k = 0; k < cells; ++k) g.add(pw(rng), ph(rng), pid(rng));
  return g;
}

}  // namespace

TEST(PixelRay, PrincipalPointIsBoresight) {
  const auto k = test_intrinsics();
  EXPECT_EQ(pixel_to_ray(k, {k.ic, k.jc}), Vec3(0.0, 0.0, 1.0));
}

TEST(PixelRay, UnitOffset) {
  const auto k = test_intrinsics();
  EXPECT_EQ(pixel_to_ray(k, {k.ic + k.fx, k.jc}), Vec3(1.0, 0.0, 1.0));
}

TEST(PixelRay, ForwardInverseIdentity) {
  const auto k = test_intrinsics();
  Rng rng(11);
  std::uniform_real_distribution<double> u(-100.0, 200.0);
  for (int n = 0; n < 1000; ++n) {
    const PixelCoord p{u(rng), u(rng)};
    const PixelCoord q = k.project(pixel_to_ray(k, p) * 7.3);
    EXPECT_NEAR(q.i, p.i, 1e-12);
    EXPECT_NEAR(q.j, p.j, 1e-12);
  }
}

TEST(CameraToLidar, IdentityAndTranslation) {
  const Vec3 p(1.0, -2.0, 3.0);
  EXPECT_EQ(camera_to_lidar(CameraExtrinsics{}, p), p);
  CameraExtrinsics t;
  t.translation = {4.0, 5.0, 6.0};
  EXPECT_EQ(camera_to_lidar(t, p), p + t.translation);
}

TEST(CameraToLidar, InverseComposesToIdentity) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int n = 0; n < 100; ++n) {
    const Vec3 pos(u(rng), u(rng), 20.0 + u(rng));
    const CameraExtrinsics e{look_at_rotation(pos, {u(rng), u(rng), 0.0}), pos};
    const Vec3 p(u(rng), u(rng), u(rng));
    const Vec3 back = camera_to_lidar(e.inverse(), camera_to_lidar(e, p));
    EXPECT_LT((back - p).norm(), 1e-12);
    EXPECT_LT((e.matrix() * e.inverse().matrix() - Mat4::Identity()).norm(), 1e-12);
  }
}

TEST(LookAt, ProperRotation) {
  const Mat3 r = look_at_rotation({10.0, 20.0, 50.0}, {0.0, 0.0, 0.0}, {1.0, 1.0, 0.0});
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-12);
}

TEST(Bev, FloorAtLowerBound) {
  BevSpec b;
  long w = -1, h = -1;
  ASSERT_TRUE(scalar_cell(b.w_min, b.h_min, b, w, h));
  EXPECT_EQ(b.cell_w(b.w_min), 0);
  EXPECT_EQ(b.cell_h(b.h_min), 0);
}

TEST(Bev, JustBelowUpperBound) {
  BevSpec b;
  const double x = std::nextafter(b.w_max, b.w_min);
  EXPECT_EQ(b.cell_w(x), static_cast<long>(b.width()) - 1);
}

TEST(Lift, NadirPrincipalPointLandsBelowCamera) {
  BevSpec b;
  b.w_min = b.h_min = 0.0;
  b.w_max = b.h_max = 100.0;
  const auto k = test_intrinsics();
  const auto e = nadir_at({50.0, 50.0, 50.0});
  const LiftResult r = lift_pixel_to_bev(k, e, {k.ic, k.jc}, 0.0, b);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.point.x(), 50.0, 1e-9);
  EXPECT_NEAR(r.point.y(), 50.0, 1e-9);
  EXPECT_EQ(r.cell, (BevCell{100, 100}));
}

TEST(Lift, LowerEdgePointGetsCellZero) {
  // Nadir camera over (w_min, 0): the principal ray hits X = w_min exactly.
  BevSpec b;
  const auto k = test_intrinsics();
  const auto e = nadir_at({b.w_min, 0.0, 40.0});
  const LiftResult r = lift_pixel_to_bev(k, e, {k.ic, k.jc}, 0.0, b);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.cell.w, 0u);
}

TEST(Lift, ParallelRayIsDegenerate) {
  // Camera looking horizontally: the principal ray never meets the ground.
  const Vec3 pos(0.0, 0.0, 10.0);
  const CameraExtrinsics e{look_at_rotation(pos, {10.0, 0.0, 10.0}, Vec3::UnitZ()), pos};
  const auto k = test_intrinsics();
  const LiftResult r = lift_pixel_to_bev(k, e, {k.ic, k.jc}, 0.0, BevSpec{});
  EXPECT_EQ(r.status, LiftStatus::kDegenerate);
}

TEST(Lift, CellsMatchScalarFloorFormula) {
  BevSpec b;
  const auto k = test_intrinsics();
  Rng rng(5);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  std::uniform_real_distribution<double> px(0.0, 120.0);
  int checked = 0;
  for (int n = 0; n < 2000; ++n) {
    const Vec3 pos(u(rng), u(rng), 50.0);
    const CameraExtrinsics e{
        look_at_rotation(pos, {0.4 * pos.x(), 0.4 * pos.y(), 0.0}), pos};
    const LiftResult r = lift_pixel_to_bev(k, e, {px(rng), px(rng)}, 0.0, b);
    if (r.status == LiftStatus::kDegenerate) continue;
    long w = 0, h = 0;
    const bool inside = scalar_cell(r.point.x(), r.point.y(), b, w, h);
    EXPECT_EQ(r.ok(), inside);
    if (inside) {
      EXPECT_EQ(r.cell.w, static_cast<std::size_t>(w));
      EXPECT_EQ(r.cell.h, static_cast<std::size_t>(h));
      ++checked;
    }
  }
  EXPECT_GT(checked, 500);
}

TEST(Project, BackgroundImageGivesEmptyGrid) {
  DenseImage img(20, 30, 3);
  img.enable_instance_ids();
  const auto g = project_view_to_bev(img, test_intrinsics(),
                                     nadir_at({0.0, 0.0, 50.0}), BevSpec{});
  EXPECT_TRUE(g.empty());
}

TEST(Project, SinglePixelOccupiesOneCell) {
  DenseImage img(20, 30, 3);
  img.enable_instance_ids();
  img.instance_ids()[img.pixel_index(4, 9)] = 3;
  const auto g = project_view_to_bev(img, {20.0, 20.0, 9.5, 14.5},
                                     nadir_at({0.0, 0.0, 50.0}), BevSpec{});
  EXPECT_EQ(g.occupied_cells(), 1u);
}

TEST(Project, MatchesPerPixelLifting) {
  const BevSpec b;
  const auto k = test_intrinsics();
  const Vec3 pos(20.0, -15.0, 50.0);
  const CameraExtrinsics e{look_at_rotation(pos, {8.0, -6.0, 0.0}), pos};
  DenseImage img(56, 120, 3);
  img.enable_instance_ids();
  Rng rng(8);
  std::uniform_int_distribution<int> pid(0, 4);
  for (auto& id : img.instance_ids()) id = pid(rng);
  std::vector<std::uint8_t> mask(img.pixel_count());
  for (auto& m : mask) m = static_cast<std::uint8_t>(rng() & 1u);

  BevGrid expected(b);
  for (std::size_t i = 0; i < img.rows(); ++i) {
    for (std::size_t j = 0; j < img.cols(); ++j) {
      const std::size_t p = img.pixel_index(i, j);
      if (!img.instance_ids()[p] || !mask[p]) continue;
      const auto r = lift_pixel_to_bev(
          k, e, {static_cast<double>(i), static_cast<double>(j)}, 0.0, b);
      if (r.ok()) expected.add(r.cell.w, r.cell.h, img.instance_ids()[p]);
    }
  }
  ProjectionDiagnostics diag;
  const auto got = project_view_to_bev(img, k, e, b, mask, &diag);
  EXPECT_EQ(got, expected);
  EXPECT_GT(diag.lifted, 0u);
}

TEST(Fuse, IdentityNeutralCommutativeAssociative) {
  BevSpec b;
  b.w_min = b.h_min = -5.0;
  b.w_max = b.h_max = 5.0;
  Rng rng(21);
  const BevGrid g1 = random_grid(b, rng, 30);
  const BevGrid g2 = random_grid(b, rng, 30);
  const BevGrid g3 = random_grid(b, rng, 30);
  const BevGrid empty(b);

  EXPECT_EQ(fuse_bev(std::vector<BevGrid>{g1}), g1);
  EXPECT_EQ(fuse_bev(std::vector<BevGrid>{g1, empty}), g1);
  EXPECT_EQ(fuse_bev(std::vector<BevGrid>{g1, g2}),
            fuse_bev(std::vector<BevGrid>{g2, g1}));
  const BevGrid left = fuse_bev(std::vector<BevGrid>{fuse_bev(std::vector<BevGrid>{g1, g2}), g3});
  const BevGrid right = fuse_bev(std::vector<BevGrid>{g1, fuse_bev(std::vector<BevGrid>{g2, g3})});
  EXPECT_EQ(left, right);

  const BevGrid sum = fuse_bev(std::vector<BevGrid>{g1, g2});
  for (std::size_t c = 0; c < sum.counts().size(); ++c) {
    EXPECT_EQ(sum.counts()[c], g1.counts()[c] + g2.counts()[c]);
  }
}

TEST(Fuse, SpecMismatch) {
  BevSpec a;
  BevSpec b;
  b.dw = 1.0;
  EXPECT_THROW(fuse_bev(std::vector<BevGrid>{BevGrid(a), BevGrid(b)}),
               SpecMismatchError);
}
