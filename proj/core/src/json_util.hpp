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

#ifndef COPERC_SRC_JSON_UTIL_HPP
#define COPERC_SRC_JSON_UTIL_HPP

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "coperc/common.hpp"

namespace coperc::detail {

// Reads fields from a JSON object and rejects keys nobody asked for.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string context)
      : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) {
      throw ConfigError(context_ + ": expected an object");
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(context_ + "." + key + ": " + e.what());
    }
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError(context_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

 private:
  const nlohmann::json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

}  // namespace coperc::detail

#endif  // COPERC_SRC_JSON_UTIL_HPP
