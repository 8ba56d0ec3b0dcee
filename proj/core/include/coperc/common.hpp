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

#ifndef COPERC_COMMON_HPP
#define COPERC_COMMON_HPP

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace coperc {

using Complex = std::complex<double>;
using Rng = std::mt19937_64;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;

// Error hierarchy. Every failure the library reports derives from Error so
// callers (the CLI in particular) can map them onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class SpecMismatchError : public Error {
 public:
  using Error::Error;
};

class EmptySelectionError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

// Raised when a JointAction violates one of the problem constraints. Tags:
// "kappa_range", "codebook_membership", "unit_norm", and "association"
// (binary association, at least one UAV selected).
class ConstraintViolation : public Error {
 public:
  ConstraintViolation(std::string constraint, const std::string& what)
      : Error("constraint " + constraint + " violated: " + what),
        constraint_(std::move(constraint)) {}
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

// Named random sub-streams. All randomness in a run flows from one root seed;
// each component draws from derive_seed(root, "<component>", index).
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view stream,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(root, stream, index));
}

// Version string embedded at build time (git-describe style).
const char* version_string();

}  // namespace coperc

#endif  // COPERC_COMMON_HPP
