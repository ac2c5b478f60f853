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

#include "geps/ingest.hpp"

#include <algorithm>
#include <stdexcept>

#include "geps/fragment_codec.hpp"

namespace geps {

std::vector<PlacementRecord> round_robin_placements(DatasetId dataset, std::uint32_t fragments,
                                                    std::uint32_t replication,
                                                    const std::vector<std::string>& nodes) {
  if (nodes.empty()) throw std::invalid_argument("no nodes to place fragments on");
  if (replication == 0 || replication > nodes.size())
    throw std::invalid_argument("replication " + std::to_string(replication) + " with " +
                                std::to_string(nodes.size()) + " node(s)");
  std::vector<PlacementRecord> out;
  for (std::uint32_t i = 0; i < fragments; ++i)
    for (std::uint32_t r = 0; r < replication; ++r)
      out.push_back({dataset, i, nodes[(i + r) % nodes.size()], r});
  return out;
}

std::vector<PlacementRecord> stage_dataset(const std::vector<FragmentFile>& fragments,
                                           const std::vector<IngestNode>& nodes,
                                           std::uint32_t replication,
                                           std::chrono::milliseconds timeout) {
  if (fragments.empty()) return {};
  std::vector<std::string> names;
  for (const auto& n : nodes) names.push_back(n.name);
  const auto dataset = fragments.front().meta.dataset_id;
  auto placements = round_robin_placements(dataset, static_cast<std::uint32_t>(fragments.size()),
                                           replication, names);
  for (const auto& p : placements) {
    const auto& node = nodes[static_cast<std::size_t>(
        std::find(names.begin(), names.end(), p.node) - names.begin())];
    AgentClient(node.address, timeout)
        .stage(dataset, p.fragment_index, encode_fragment(fragments.at(p.fragment_index)));
  }
  return placements;
}

}  // namespace geps
