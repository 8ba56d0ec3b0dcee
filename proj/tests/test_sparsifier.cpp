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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "coperc/common.hpp"
#include "coperc/sparsifier.hpp"

using namespace coperc;

namespace {

DenseImage random_image(std::size_t rows, std::size_t cols, std::size_t ch,
                        Rng& rng) {
  DenseImage img(rows, cols, ch);
  std::uniform_int_distribution<int> level(0, 255);
  for (auto& v : img.values()) v = level(rng) / 255.0;
  return img;
}

ImportanceMap random_map(std::size_t rows, std::size_t cols, Rng& rng) {
  ImportanceMap m{rows, cols, std::vector<double>(rows * cols)};
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : m.values) v = n(rng);
  return m;
}

// Scalar double loop over the eight neighbour offsets in row-major order.
std::vector<double> score_oracle(const ImportanceMap& m) {
  static const int off[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                {0, 1},   {1, -1}, {1, 0},  {1, 1}};
  const long X = static_cast<long>(m.rows);
  const long Y = static_cast<long>(m.cols);
  std::vector<double> out(m.values.size(), 0.0);
  for (long i = 0; i < X; ++i) {
    for (long j = 0; j < Y; ++j) {
      double sum = 0.0;
      int n = 0;
      for (const auto& o : off) {
        const long a = i + o[0];
        const long b = j + o[1];
        if (a >= 0 && a < X && b >= 0 && b < Y) {
          sum += m.values[static_cast<std::size_t>(a * Y + b)];
          ++n;
        }
      }
      out[static_cast<std::size_t>(i * Y + j)] =
          n ? sum / n - m.values[static_cast<std::size_t>(i * Y + j)] : 0.0;
    }
  }
  return out;
}

// Full stable sort on (score desc, index asc).
std::vector<std::uint32_t> sort_oracle(const std::vector<double>& s,
                                       std::size_t k) {
  std::vector<std::uint32_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return s[a] > s[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

TEST(Importance, ConstantImageGivesConstantMap) {
  const DenseImage img(7, 9, 3, 0.4);
  const auto m = importance_map(img);
  for (double v : m.values) EXPECT_EQ(v, m.values.front());
}

TEST(Importance, BrightPixelIsStrictMaximum) {
  DenseImage img(5, 5, 1, 0.0);
  img.at(2, 2, 0) = 1.0;
  const auto m = importance_map(img);
  for (std::size_t p = 0; p < m.values.size(); ++p) {
    if (p != 12) {
      EXPECT_LT(m.values[p], m.values[12]);
    }
  }
  // (1 - 1/9)^2 at the bright pixel.
  EXPECT_NEAR(m.values[12], 64.0 / 81.0, 1e-15);
}

TEST(Importance, Deterministic) {
  Rng rng(1);
  const auto img = random_image(10, 12, 3, rng);
  EXPECT_EQ(importance_map(img), importance_map(img));
}

TEST(NeighborhoodScore, ConstantMapScoresZero) {
  const ImportanceMap m{6, 5, std::vector<double>(30, 2.5)};
  for (double v : neighborhood_score(m)) EXPECT_EQ(v, 0.0);
}

TEST(NeighborhoodScore, CentreZeroAmongOnes) {
  ImportanceMap m{3, 3, std::vector<double>(9, 1.0)};
  m.values[4] = 0.0;
  EXPECT_EQ(neighborhood_score(m)[4], 1.0);
}

TEST(NeighborhoodScore, MatchesDoubleLoopExactly) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t X = 1 + rng() % 9;
    const std::size_t Y = 1 + rng() % 9;
    const auto m = random_map(X, Y, rng);
    EXPECT_EQ(neighborhood_score(m), score_oracle(m));
  }
  const auto m4 = random_map(4, 4, rng);
  EXPECT_EQ(neighborhood_score(m4), score_oracle(m4));
}

TEST(TopK, FullRatioKeepsEverything) {
  Rng rng(2);
  const auto img = random_image(6, 7, 3, rng);
  const auto s = top_k_select(img, neighborhood_score(importance_map(img)), 1.0);
  EXPECT_EQ(s.count(), 42u);
  EXPECT_EQ(s.retained, img.values());
}

TEST(TopK, SinglePixelIsArgmax) {
  Rng rng(3);
  const auto img = random_image(6, 7, 3, rng);
  const auto scores = neighborhood_score(importance_map(img));
  const auto s = top_k_select(img, scores, 1.0 / 42.0);
  ASSERT_EQ(s.count(), 1u);
  const auto best = std::max_element(scores.begin(), scores.end()) - scores.begin();
  EXPECT_EQ(s.indices[0], static_cast<std::uint32_t>(best));
}

TEST(TopK, TieBreakMatchesSortOracle) {
  const DenseImage img(4, 4, 1, 0.5);
  // Three-way tie at the cut for k = 4: one strict winner then 0.7 x 3,
  // with further 0.7s beyond the cut.
  std::vector<double> s(16, 0.1);
  s[9] = 0.9;
  for (std::size_t p : {2u, 5u, 11u, 14u, 15u}) s[p] = 0.7;
  const auto sparse = top_k_select(img, s, 0.25);
  EXPECT_EQ(sparse.indices, sort_oracle(s, 4));
  EXPECT_EQ(sparse.indices, (std::vector<std::uint32_t>{2, 5, 9, 11}));

  Rng rng(4);
  std::uniform_int_distribution<int> coarse(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> t(16);
    for (auto& v : t) v = coarse(rng);
    const double kappa = (1 + rng() % 16) / 16.0;
    EXPECT_EQ(top_k_select(img, t, kappa).indices,
              sort_oracle(t, top_k_count(4, 4, kappa)));
  }
}

TEST(TopK, MasksAreNestedInKappa) {
  Rng rng(5);
  const auto img = random_image(14, 30, 3, rng);
  const auto scores = neighborhood_score(importance_map(img));
  std::vector<std::uint8_t> prev(img.pixel_count(), 0);
  for (double kappa : {0.05, 0.1, 0.15, 0.25, 0.5, 1.0}) {
    const auto s = top_k_select(img, scores, kappa);
    EXPECT_EQ(s.count(), top_k_count(14, 30, kappa));
    for (std::size_t p = 0; p < prev.size(); ++p) {
      if (prev[p]) {
        EXPECT_TRUE(s.mask[p]);
      }
    }
    prev = s.mask;
  }
}

TEST(TopK, RatioOutOfRange) {
  const DenseImage img(2, 2, 1);
  const std::vector<double> s(4, 0.0);
  EXPECT_THROW(top_k_select(img, s, 0.0), RangeError);
  EXPECT_THROW(top_k_select(img, s, 1.01), RangeError);
  EXPECT_THROW(top_k_select(img, s, -0.5), RangeError);
}

TEST(TopK, AtLeastOnePixel) {
  EXPECT_EQ(top_k_count(10, 10, 0.001), 1u);
  EXPECT_EQ(top_k_count(10, 10, 0.25), 25u);
}

TEST(Reconstruct, FullRetentionIsLossless) {
  Rng rng(6);
  const auto img = random_image(9, 11, 3, rng);
  const auto s = top_k_select(img, std::vector<double>(99, 0.0), 1.0);
  for (double sigma : {0.5, 1.0, 3.0}) {
    EXPECT_EQ(gaussian_reconstruct(s, sigma).values(), img.values());
  }
}

TEST(Reconstruct, ConstantRetainedValues) {
  DenseImage img(8, 8, 2, 0.625);
  Rng rng(7);
  std::vector<double> scores(64);
  for (auto& v : scores) v = std::uniform_real_distribution<double>()(rng);
  const auto s = top_k_select(img, scores, 0.25);
  for (double sigma : {0.3, 1.0, 10.0}) {
    const DenseImage out = gaussian_reconstruct(s, sigma);
    for (double v : out.values()) {
      EXPECT_NEAR(v, 0.625, 1e-15);
    }
  }
}

TEST(Reconstruct, HandComputedThreeByThree) {
  SparseImage s;
  s.rows = s.cols = 3;
  s.channels = 1;
  s.kappa = 2.0 / 9.0;
  s.mask.assign(9, 0);
  s.mask[0] = s.mask[1] = 1;
  s.indices = {0, 1};     // (0,0) at distance sqrt2, (0,1) at distance 1
  s.retained = {1.0, 0.0};
  const auto out = gaussian_reconstruct(s, 1.0);
  const double expected = std::exp(-1.0) / (std::exp(-0.5) + std::exp(-1.0));
  EXPECT_NEAR(out.at(1, 1, 0), expected, 1e-15);
  EXPECT_NEAR(expected, 0.3775, 1e-4);
}

TEST(Reconstruct, EmptyWindowFallsBackToGlobalMean) {
  SparseImage s;
  s.rows = 1;
  s.cols = 9;
  s.channels = 1;
  s.mask.assign(9, 0);
  s.mask[0] = s.mask[1] = 1;
  s.indices = {0, 1};
  s.retained = {0.2, 0.4};
  ReconstructionDiagnostics diag;
  const auto out = gaussian_reconstruct(s, 1.0, &diag);
  EXPECT_NEAR(out.at(0, 8, 0), 0.3, 1e-15);
  EXPECT_GT(diag.fallback, 0u);
}

TEST(DataSize, ReferenceFrame) {
  EXPECT_EQ(data_size(224, 480, 3, 0.25, 8), 645120u);
  EXPECT_EQ(data_size(1, 1, 1, 1.0, 8), 8u);
  EXPECT_EQ(data_size(224, 480, 3, 0.25, 16), 2 * data_size(224, 480, 3, 0.25, 8));
}

TEST(DataSize, FloorFormulaSweep) {
  for (std::size_t X : {1u, 7u, 56u}) {
    for (std::size_t Y : {1u, 13u, 120u}) {
      for (std::size_t C : {1u, 3u}) {
        for (unsigned M : {1u, 8u, 12u}) {
          std::uint64_t prev = 0;
          for (int n = 1; n <= 20; ++n) {
            const double kappa = n / 20.0;
            const double k = std::floor(kappa * static_cast<double>(X * Y));
            const std::uint64_t expected =
                static_cast<std::uint64_t>(std::max(1.0, k)) * C * M;
            const std::uint64_t got = data_size(X, Y, C, kappa, M);
            EXPECT_EQ(got, expected);
            EXPECT_GE(got, prev);
            prev = got;
          }
        }
      }
    }
  }
}

TEST(Wire, BitsEqualPayloadPlusOverhead) {
  Rng rng(8);
  const auto img = random_image(28, 60, 3, rng);
  const auto scores = neighborhood_score(importance_map(img));
  for (double kappa : {0.05, 0.25, 1.0}) {
    const auto s = top_k_select(img, scores, kappa);
    const auto packet = encode_sparse(s, 8);
    EXPECT_EQ(packet.bits, data_size(s, 8) + wire_overhead_bits(s.count()));
    EXPECT_EQ(wire_overhead_bits(s.count()),
              kWireHeaderBits + kWireIndexBits * s.count());
    EXPECT_EQ(decode_sparse(packet), s);
  }
}

TEST(Wire, TruncatedPacketRejected) {
  Rng rng(9);
  const auto img = random_image(8, 8, 3, rng);
  const auto s = top_k_select(img, std::vector<double>(64, 0.0), 0.5);
  auto packet = encode_sparse(s, 8);
  packet.bits -= 16;
  packet.bytes.resize(packet.bytes.size() - 2);
  EXPECT_THROW(decode_sparse(packet), ParseError);
}
