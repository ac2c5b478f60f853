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

#include "geps/planner.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace geps {

std::string JobPlan::node_for(FragmentIndex fragment) const {
  for (const auto& a : assignments)
    if (std::binary_search(a.fragments.begin(), a.fragments.end(), fragment)) return a.node;
  return {};
}

std::optional<std::string> best_holder(const std::vector<PlacementRecord>& placements,
                                       FragmentIndex fragment, const std::set<std::string>& alive,
                                       const std::set<std::string>& excluded) {
  const PlacementRecord* best = nullptr;
  for (const auto& p : placements) {
    if (p.fragment_index != fragment || !alive.count(p.node) || excluded.count(p.node)) continue;
    if (!best || std::tie(p.replica_rank, p.node) < std::tie(best->replica_rank, best->node)) best = &p;
  }
  if (!best) return std::nullopt;
  return best->node;
}

namespace {

std::string join_indices(const std::vector<FragmentIndex>& v) {
  std::string s;
  for (auto i : v) s += (s.empty() ? "" : ",") + std::to_string(i);
  return s;
}

}  // namespace

JobPlan plan_job(const JobRecord& job, const DatasetRecord& dataset,
                 const std::vector<PlacementRecord>& placements,
                 const std::vector<NodeRecord>& nodes, const std::set<std::string>& excluded) {
  std::set<std::string> alive;
  for (const auto& n : nodes)
    if (n.alive && !excluded.count(n.name)) alive.insert(n.name);

  JobPlan plan;
  plan.job_id = job.job_id;
  plan.dataset_id = dataset.dataset_id;
  plan.filter = job.spec.filter_text;
  plan.calibration = job.spec.calibration;

  std::map<std::string, std::vector<FragmentIndex>> by_node;
  std::vector<FragmentIndex> missing;
  const bool all = job.spec.target == kAllNodes;
  if (!all && !alive.count(job.spec.target))
    throw PlanningError("target node " + job.spec.target + " is not alive");

  for (FragmentIndex f = 0; f < dataset.fragment_count; ++f) {
    if (all) {
      if (auto h = best_holder(placements, f, alive)) {
        by_node[*h].push_back(f);
      } else {
        missing.push_back(f);
      }
      continue;
    }
    const auto& target = job.spec.target;
    const bool held = std::any_of(placements.begin(), placements.end(), [&](const PlacementRecord& p) {
      return p.fragment_index == f && p.node == target;
    });
    if (!held) {
      auto src = best_holder(placements, f, alive, {target});
      if (!src) {
        missing.push_back(f);
        continue;
      }
      plan.staging_moves.push_back({f, *src, target});
    }
    by_node[target].push_back(f);
  }
  if (!missing.empty())
    throw PlanningError("unrecoverable fragments: " + join_indices(missing), missing);
  for (auto& [node, frags] : by_node) plan.assignments.push_back({node, std::move(frags)});
  return plan;
}

}  // namespace geps
