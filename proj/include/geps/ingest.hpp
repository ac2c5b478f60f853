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

#include <string>
#include <vector>

#include "geps/agent_client.hpp"
#include "geps/catalog.hpp"

namespace geps {

struct IngestNode {
  std::string name;
  wire::Address address;
};

/// Replica r of fragment i goes to node (i + r) mod n with replica rank r.
/// Throws std::invalid_argument unless 1 <= replication <= nodes.size().
std::vector<PlacementRecord> round_robin_placements(DatasetId dataset, std::uint32_t fragments,
                                                    std::uint32_t replication,
                                                    const std::vector<std::string>& nodes);

/// Stages every fragment according to round_robin_placements and returns the
/// placements. Agent failures propagate as AgentError or wire::NetworkError.
std::vector<PlacementRecord> stage_dataset(const std::vector<FragmentFile>& fragments,
                                           const std::vector<IngestNode>& nodes,
                                           std::uint32_t replication,
                                           std::chrono::milliseconds timeout);

}  // namespace geps
