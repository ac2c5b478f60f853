// Copyright 2026 The GEPS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "geps/event.hpp"
#include "geps/filter.hpp"
#include "json.hpp"

namespace geps {

inline constexpr std::uint32_t kProtocolVersion = 1;
inline constexpr std::uint16_t kDefaultAgentPort = 2135;

using JobId = std::uint64_t;
using FragmentKey = std::pair<DatasetId, FragmentIndex>;

/// Resource snapshot published by a node agent.
struct NodeInfo {
  std::string name;
  std::uint32_t protocol_version = kProtocolVersion;
  std::uint32_t processors = 1;
  double load_1m = 0;
  std::uint64_t free_disk_bytes = 0;
  std::uint64_t bandwidth_bytes_per_s = 0;
  std::vector<FragmentKey> fragments_held;
  std::uint64_t uptime_s = 0;

  friend bool operator==(const NodeInfo&, const NodeInfo&) = default;
};

void to_json(nlohmann::json& j, const NodeInfo& v);
void from_json(const nlohmann::json& j, NodeInfo& v);

/// {"bx": {"scale": s, "offset": o}, ...}
nlohmann::json calibration_to_json(const filter::Calibration& cal);
filter::Calibration calibration_from_json(const nlohmann::json& j);

}  // namespace geps
