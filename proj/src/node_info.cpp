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

#include "geps/node_info.hpp"

namespace geps {

using nlohmann::json;

json calibration_to_json(const filter::Calibration& cal) {
  json j = json::object();
  for (const auto& [name, t] : cal) j[name] = {{"scale", t.scale}, {"offset", t.offset}};
  return j;
}

filter::Calibration calibration_from_json(const json& j) {
  filter::Calibration cal;
  for (auto it = j.begin(); it != j.end(); ++it)
    cal[it.key()] = {it.value().at("scale").get<double>(), it.value().at("offset").get<double>()};
  return cal;
}

void to_json(json& j, const NodeInfo& v) {
  json held = json::array();
  for (const auto& [d, f] : v.fragments_held) held.push_back({d, f});
  j = {{"name", v.name},
       {"protocol_version", v.protocol_version},
       {"processors", v.processors},
       {"load_1m", v.load_1m},
       {"free_disk_bytes", v.free_disk_bytes},
       {"bandwidth_bytes_per_s", v.bandwidth_bytes_per_s},
       {"fragments_held", held},
       {"uptime_s", v.uptime_s}};
}

void from_json(const json& j, NodeInfo& v) {
  v.name = j.at("name").get<std::string>();
  v.protocol_version = j.value("protocol_version", kProtocolVersion);
  v.processors = j.value("processors", 1u);
  v.load_1m = j.value("load_1m", 0.0);
  v.free_disk_bytes = j.value("free_disk_bytes", std::uint64_t{0});
  v.bandwidth_bytes_per_s = j.value("bandwidth_bytes_per_s", std::uint64_t{0});
  v.uptime_s = j.value("uptime_s", std::uint64_t{0});
  v.fragments_held.clear();
  for (const auto& p : j.value("fragments_held", json::array()))
    v.fragments_held.emplace_back(p.at(0).get<DatasetId>(), p.at(1).get<FragmentIndex>());
}

}  // namespace geps
