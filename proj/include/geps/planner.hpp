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

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "geps/catalog.hpp"

namespace geps {

struct Assignment {
  std::string node;
  std::vector<FragmentIndex> fragments;  // ascending
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Copy of one fragment from a node that holds it to one that will run it.
struct StagingMove {
  FragmentIndex fragment_index = 0;
  std::string source;
  std::string destination;
  friend bool operator==(const StagingMove&, const StagingMove&) = default;
};

/// Who runs what for one job. Every fragment of the dataset appears in exactly
/// one assignment, and every assigned node was alive when the plan was made.
struct JobPlan {
  JobId job_id = 0;
  DatasetId dataset_id = 0;
  std::vector<Assignment> assignments;  // by node name
  std::vector<StagingMove> staging_moves;
  std::string filter;
  std::optional<filter::Calibration> calibration;

  /// Node assigned to `fragment`, or empty.
  std::string node_for(FragmentIndex fragment) const;
  friend bool operator==(const JobPlan&, const JobPlan&) = default;
};

class PlanningError : public std::runtime_error {
 public:
  PlanningError(const std::string& what, std::vector<FragmentIndex> missing = {})
      : std::runtime_error(what), missing_(std::move(missing)) {}
  const std::vector<FragmentIndex>& missing() const { return missing_; }

 private:
  std::vector<FragmentIndex> missing_;
};

/// Holder preference: lowest replica rank first, then node name.
/// Returns the best alive holder of `fragment` outside `excluded`.
std::optional<std::string> best_holder(const std::vector<PlacementRecord>& placements,
                                       FragmentIndex fragment, const std::set<std::string>& alive,
                                       const std::set<std::string>& excluded = {});

/// Target ALL: each fragment runs where it already lives. Single target: the
/// whole dataset runs on that node, with staging moves for the fragments it
/// lacks. Deterministic for identical inputs. Throws PlanningError.
JobPlan plan_job(const JobRecord& job, const DatasetRecord& dataset,
                 const std::vector<PlacementRecord>& placements,
                 const std::vector<NodeRecord>& nodes, const std::set<std::string>& excluded = {});

}  // namespace geps
