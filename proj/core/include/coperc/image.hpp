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

#ifndef COPERC_IMAGE_HPP
#define COPERC_IMAGE_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

namespace coperc {

// Dense X x Y x C image. Pixel (i, j) has linear index i * cols + j
// ("row-major"); channels are interleaved. instance_ids is either empty or
// holds one id per pixel (0 = background, vehicles are numbered from 1).
class DenseImage {
 public:
  DenseImage() = default;
  DenseImage(std::size_t rows, std::size_t cols, std::size_t channels,
             double fill = 0.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept { return rows_ * cols_; }
  std::size_t pixel_index(std::size_t i, std::size_t j) const noexcept {
    return i * cols_ + j;
  }

  double& at(std::size_t i, std::size_t j, std::size_t c) {
    return values_[(i * cols_ + j) * channels_ + c];
  }
  double at(std::size_t i, std::size_t j, std::size_t c) const {
    return values_[(i * cols_ + j) * channels_ + c];
  }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool has_instance_ids() const noexcept { return !instance_ids_.empty(); }
  std::vector<std::int32_t>& instance_ids() noexcept { return instance_ids_; }
  const std::vector<std::int32_t>& instance_ids() const noexcept {
    return instance_ids_;
  }
  std::int32_t instance_id(std::size_t i, std::size_t j) const {
    return instance_ids_[i * cols_ + j];
  }
  void enable_instance_ids() { instance_ids_.assign(pixel_count(), 0); }

  bool operator==(const DenseImage&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> values_;
  std::vector<std::int32_t> instance_ids_;
};

}  // namespace coperc

#endif  // COPERC_IMAGE_HPP
