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

#include "coperc/sparsifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "coperc/common.hpp"

namespace coperc {
namespace {

constexpr std::uint32_t kWireMagic = 0x43505350;  // "CPSP"
constexpr long kReconstructRadius = 2;

class BitWriter {
 public:
  void put(std::uint64_t value, unsigned nbits) {
    for (unsigned b = nbits; b-- > 0;) {
      if (bits_ % 8 == 0) bytes_.push_back(0);
      if ((value >> b) & 1u) {
        bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
      }
      ++bits_;
    }
  }
  void put_u32(std::uint32_t v) { put(v, 32); }
  void put_f64(double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, sizeof(u));
    put(u, 64);
  }
  WirePacket finish() { return {std::move(bytes_), bits_}; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint64_t bits_ = 0;
};

class BitReader {
 public:
  explicit BitReader(const WirePacket& p) : p_(p) {}
  std::uint64_t get(unsigned nbits) {
    if (pos_ + nbits > p_.bits || (pos_ + nbits + 7) / 8 > p_.bytes.size()) {
      throw ParseError("sparse image packet is truncated");
    }
    std::uint64_t v = 0;
    for (unsigned b = 0; b < nbits; ++b, ++pos_) {
      const unsigned bit = (p_.bytes[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
      v = (v << 1) | bit;
    }
    return v;
  }
  std::uint32_t get_u32() { return static_cast<std::uint32_t>(get(32)); }
  double get_f64() {
    const std::uint64_t u = get(64);
    double v;
    std::memcpy(&v, &u, sizeof(v));
    return v;
  }

 private:
  const WirePacket& p_;
  std::uint64_t pos_ = 0;
};

}  // namespace

ImportanceMap local_variance_scorer(const DenseImage& image) {
  const std::size_t X = image.rows();
  const std::size_t Y = image.cols();
  const std::size_t C = image.channels();
  if (C == 0) throw ShapeError("importance map needs at least one channel");
  std::vector<double> lum(X * Y, 0.0);
  for (std::size_t p = 0; p < X * Y; ++p) {
    double s = 0.0;
    for (std::size_t c = 0; c < C; ++c) s += image.values()[p * C + c];
    lum[p] = s / static_cast<double>(C);
  }
  ImportanceMap out{X, Y, std::vector<double>(X * Y, 0.0)};
  for (std::size_t i = 0; i < X; ++i) {
    const std::size_t i0 = i > 0 ? i - 1 : 0;
    const std::size_t i1 = std::min(i + 1, X - 1);
    for (std::size_t j = 0; j < Y; ++j) {
      const std::size_t j0 = j > 0 ? j - 1 : 0;
      const std::size_t j1 = std::min(j + 1, Y - 1);
      // Differences to the centre keep a constant window at exactly 0.
      const double centre = lum[i * Y + j];
      double sum = 0.0;
      for (std::size_t a = i0; a <= i1; ++a) {
        for (std::size_t b = j0; b <= j1; ++b) sum += centre - lum[a * Y + b];
      }
      const double n = static_cast<double>((i1 - i0 + 1) * (j1 - j0 + 1));
      const double d = sum / n;
      out.values[i * Y + j] = d * d;
    }
  }
  return out;
}

ImportanceMap importance_map(const DenseImage& image,
                             const ImportanceScorer& scorer) {
  if (image.channels() == 0) {
    throw ShapeError("importance map needs at least one channel");
  }
  ImportanceMap m = scorer ? scorer(image) : local_variance_scorer(image);
  if (m.rows != image.rows() || m.cols != image.cols() ||
      m.values.size() != image.pixel_count()) {
    throw ShapeError("scorer returned a map of the wrong shape");
  }
  for (double v : m.values) {
    if (!std::isfinite(v)) throw NumericError("importance map is not finite");
  }
  return m;
}

std::vector<double> neighborhood_score(const ImportanceMap& map) {
  const std::size_t X = map.rows;
  const std::size_t Y = map.cols;
  std::vector<double> score(X * Y, 0.0);
  for (std::size_t i = 0; i < X; ++i) {
    for (std::size_t j = 0; j < Y; ++j) {
      double sum = 0.0;
      int n = 0;
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const long a = static_cast<long>(i) + di;
          const long b = static_cast<long>(j) + dj;
          if (a < 0 || b < 0 || a >= static_cast<long>(X) ||
              b >= static_cast<long>(Y)) {
            continue;
          }
          sum += map.values[static_cast<std::size_t>(a) * Y +
                            static_cast<std::size_t>(b)];
          ++n;
        }
      }
      // A 1x1 map has no neighbours; its score is defined as 0.
      score[i * Y + j] = n > 0 ? sum / n - map.values[i * Y + j] : 0.0;
    }
  }
  return score;
}

std::size_t top_k_count(std::size_t rows, std::size_t cols, double kappa) {
  if (!(kappa > 0.0) || kappa > 1.0) {
    throw RangeError("top-k ratio must lie in (0, 1], got " +
                     std::to_string(kappa));
  }
  const double n = std::floor(kappa * static_cast<double>(rows * cols));
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

SparseImage top_k_select(const DenseImage& image,
                         const std::vector<double>& scores, double kappa) {
  const std::size_t P = image.pixel_count();
  if (scores.size() != P) throw ShapeError("score map does not match image");
  if (P == 0) throw ShapeError("cannot sparsify an empty image");
  const std::size_t k = top_k_count(image.rows(), image.cols(), kappa);

  std::vector<std::uint32_t> order(P);
  std::iota(order.begin(), order.end(), 0u);
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k),
                    order.end(), better);
  order.resize(k);
  std::sort(order.begin(), order.end());

  SparseImage s;
  s.rows = image.rows();
  s.cols = image.cols();
  s.channels = image.channels();
  s.kappa = kappa;
  s.mask.assign(P, 0);
  s.indices = std::move(order);
  s.retained.reserve(k * s.channels);
  for (std::uint32_t p : s.indices) {
    s.mask[p] = 1;
    for (std::size_t c = 0; c < s.channels; ++c) {
      s.retained.push_back(image.values()[p * s.channels + c]);
    }
  }
  return s;
}

DenseImage gaussian_reconstruct(const SparseImage& sparse, double sigma,
                                ReconstructionDiagnostics* diag) {
  if (!(sigma > 0.0)) throw RangeError("reconstruction sigma must be > 0");
  if (sparse.indices.empty()) {
    throw EmptySelectionError("reconstruction needs a retained pixel");
  }
  const std::size_t X = sparse.rows;
  const std::size_t Y = sparse.cols;
  const std::size_t C = sparse.channels;
  DenseImage out(X, Y, C);

  // Position of each pixel in `retained`, or -1.
  std::vector<long> slot(X * Y, -1);
  for (std::size_t n = 0; n < sparse.indices.size(); ++n) {
    slot[sparse.indices[n]] = static_cast<long>(n);
  }
  std::vector<double> global(C, 0.0);
  for (std::size_t n = 0; n < sparse.indices.size(); ++n) {
    for (std::size_t c = 0; c < C; ++c) global[c] += sparse.retained[n * C + c];
  }
  for (double& g : global) g /= static_cast<double>(sparse.indices.size());

  ReconstructionDiagnostics d;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> acc(C);
  for (std::size_t i = 0; i < X; ++i) {
    for (std::size_t j = 0; j < Y; ++j) {
      const std::size_t p = i * Y + j;
      if (slot[p] >= 0) {
        for (std::size_t c = 0; c < C; ++c) {
          out.at(i, j, c) =
              sparse.retained[static_cast<std::size_t>(slot[p]) * C + c];
        }
        continue;
      }
      std::fill(acc.begin(), acc.end(), 0.0);
      double wsum = 0.0;
      for (long di = -kReconstructRadius; di <= kReconstructRadius; ++di) {
        for (long dj = -kReconstructRadius; dj <= kReconstructRadius; ++dj) {
          const long a = static_cast<long>(i) + di;
          const long b = static_cast<long>(j) + dj;
          if (a < 0 || b < 0 || a >= static_cast<long>(X) ||
              b >= static_cast<long>(Y)) {
            continue;
          }
          const long s = slot[static_cast<std::size_t>(a) * Y +
                              static_cast<std::size_t>(b)];
          if (s < 0) continue;
          const double w =
              std::exp(-static_cast<double>(di * di + dj * dj) * inv2s2);
          wsum += w;
          for (std::size_t c = 0; c < C; ++c) {
            acc[c] += w * sparse.retained[static_cast<std::size_t>(s) * C + c];
          }
        }
      }
      if (wsum > 0.0) {
        for (std::size_t c = 0; c < C; ++c) out.at(i, j, c) = acc[c] / wsum;
        ++d.interpolated;
      } else {
        for (std::size_t c = 0; c < C; ++c) out.at(i, j, c) = global[c];
        ++d.fallback;
      }
    }
  }
  if (diag) *diag = d;
  return out;
}

std::uint64_t data_size(const SparseImage& sparse, unsigned bits_per_value) {
  if (bits_per_value < 1) throw RangeError("bits per value must be >= 1");
  return static_cast<std::uint64_t>(sparse.count()) * sparse.channels *
         bits_per_value;
}

std::uint64_t data_size(std::size_t rows, std::size_t cols,
                        std::size_t channels, double kappa,
                        unsigned bits_per_value) {
  if (bits_per_value < 1) throw RangeError("bits per value must be >= 1");
  return static_cast<std::uint64_t>(top_k_count(rows, cols, kappa)) *
         channels * bits_per_value;
}

std::uint64_t wire_overhead_bits(std::size_t count) {
  return kWireHeaderBits + kWireIndexBits * count;
}

WirePacket encode_sparse(const SparseImage& sparse, unsigned bits_per_value) {
  if (bits_per_value < 1 || bits_per_value > 32) {
    throw RangeError("bits per value must lie in [1, 32]");
  }
  const double levels = std::ldexp(1.0, static_cast<int>(bits_per_value)) - 1.0;
  BitWriter w;
  w.put_u32(kWireMagic);
  w.put_u32(static_cast<std::uint32_t>(sparse.rows));
  w.put_u32(static_cast<std::uint32_t>(sparse.cols));
  w.put_u32(static_cast<std::uint32_t>(sparse.channels));
  w.put_u32(bits_per_value);
  w.put_u32(static_cast<std::uint32_t>(sparse.count()));
  w.put_f64(sparse.kappa);
  for (std::uint32_t p : sparse.indices) w.put_u32(p);
  for (double v : sparse.retained) {
    const double q = std::round(std::clamp(v, 0.0, 1.0) * levels);
    w.put(static_cast<std::uint64_t>(q), bits_per_value);
  }
  return w.finish();
}

SparseImage decode_sparse(const WirePacket& packet) {
  BitReader r(packet);
  if (r.get_u32() != kWireMagic) throw ParseError("bad sparse image magic");
  SparseImage s;
  s.rows = r.get_u32();
  s.cols = r.get_u32();
  s.channels = r.get_u32();
  const unsigned bits = r.get_u32();
  if (bits < 1 || bits > 32) throw ParseError("bad bits-per-value field");
  const std::size_t count = r.get_u32();
  s.kappa = r.get_f64();
  const std::size_t P = s.rows * s.cols;
  if (count > P) throw ParseError("sparse image count exceeds pixel count");
  s.mask.assign(P, 0);
  s.indices.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const std::uint32_t p = r.get_u32();
    if (p >= P || (!s.indices.empty() && p <= s.indices.back())) {
      throw ParseError("sparse image indices must be ascending and in range");
    }
    s.indices.push_back(p);
    s.mask[p] = 1;
  }
  const double levels = std::ldexp(1.0, static_cast<int>(bits)) - 1.0;
  s.retained.reserve(count * s.channels);
  for (std::size_t n = 0; n < count * s.channels; ++n) {
    s.retained.push_back(static_cast<double>(r.get(bits)) / levels);
  }
  return s;
}

}  // namespace coperc
