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

#ifndef COPERC_SPARSIFIER_HPP
#define COPERC_SPARSIFIER_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "coperc/image.hpp"

namespace coperc {

// Single-channel per-pixel importance, row-major like DenseImage.
struct ImportanceMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  bool operator==(const ImportanceMap&) const = default;
};

using ImportanceScorer = std::function<ImportanceMap(const DenseImage&)>;

// Default scorer: luminance (channel mean), then squared deviation from the
// 3x3 local mean (windows truncated at the border).
ImportanceMap local_variance_scorer(const DenseImage& image);

// Applies `scorer`, or the default scorer when it is empty.
ImportanceMap importance_map(const DenseImage& image,
                             const ImportanceScorer& scorer = {});

// Mean of the in-bounds 8-neighbourhood minus the centre value.
std::vector<double> neighborhood_score(const ImportanceMap& map);

// Number of pixels kept for ratio kappa: max(1, floor(kappa * X * Y)).
std::size_t top_k_count(std::size_t rows, std::size_t cols, double kappa);

struct SparseImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t channels = 0;
  double kappa = 1.0;
  std::vector<std::uint8_t> mask;      // rows * cols
  std::vector<std::uint32_t> indices;  // ascending pixel indices of the mask
  std::vector<double> retained;        // indices.size() * channels

  std::size_t count() const noexcept { return indices.size(); }
  bool operator==(const SparseImage&) const = default;
};

// Keeps the top_k_count(...) highest-scoring pixels. Equal scores are ranked
// by ascending pixel index, so masks are nested in kappa. Throws RangeError
// unless 0 < kappa <= 1.
SparseImage top_k_select(const DenseImage& image,
                         const std::vector<double>& scores, double kappa);

struct ReconstructionDiagnostics {
  std::size_t interpolated = 0;  // missing pixels filled from neighbours
  std::size_t fallback = 0;      // missing pixels with no retained neighbour
};

// Retained pixels pass through; every other pixel is the normalised
// Gaussian-weighted average of retained pixels in its 5x5 window, or the
// global retained mean when the window is empty.
DenseImage gaussian_reconstruct(const SparseImage& sparse, double sigma,
                                ReconstructionDiagnostics* diag = nullptr);

// Payload bits count * C * M.
std::uint64_t data_size(const SparseImage& sparse, unsigned bits_per_value);
std::uint64_t data_size(std::size_t rows, std::size_t cols,
                        std::size_t channels, double kappa,
                        unsigned bits_per_value);

// Uplink serialisation. Layout, little endian:
//   u32 magic, u32 rows, u32 cols, u32 channels, u32 bits, u32 count,
//   f64 kappa                                   (kWireHeaderBits)
//   count x u32 pixel index                     (32 bits per kept pixel)
//   count * channels values of `bits` bits each, packed MSB first
// Values are quantised as round(v * (2^bits - 1)) after clamping to [0, 1].
inline constexpr std::uint64_t kWireHeaderBits = 256;
inline constexpr std::uint64_t kWireIndexBits = 32;

struct WirePacket {
  std::vector<std::uint8_t> bytes;
  std::uint64_t bits = 0;  // exact number of meaningful bits
};

std::uint64_t wire_overhead_bits(std::size_t count);
WirePacket encode_sparse(const SparseImage& sparse, unsigned bits_per_value);
SparseImage decode_sparse(const WirePacket& packet);

}  // namespace coperc

#endif  // COPERC_SPARSIFIER_HPP
