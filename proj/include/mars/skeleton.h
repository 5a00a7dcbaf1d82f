// Copyright 2026 The MARS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MARS_SKELETON_H_
#define MARS_SKELETON_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mars/rng.h"

namespace mars {

struct Edge {
  int sender = 0;
  int receiver = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Directed relational graph over agents 0..n-1. `group_of[i]` is the group
// index of agent i; the controlled set is group 0.
struct SkeletonGraph {
  int n = 0;
  std::vector<Edge> edges;
  std::vector<int> group_of;

  int NumGroups() const;
  std::vector<Edge> SortedEdges() const;
};

// Complete digraph inside every group; for every unordered pair of groups,
// min(r, |g|) representatives are drawn without replacement from each side
// and all representative cross pairs are linked in both directions.
SkeletonGraph BuildSkeleton(std::span<const int> group_of, int representatives,
                            Rng& rng);

// Complete digraph on n nodes (the no-skeleton ablation).
SkeletonGraph BuildFullGraph(int n);

// Closed-form edge count of BuildSkeleton:
//   sum_g |g|(|g|-1) + 2 sum_{g<g'} min(r,|g|) min(r,|g'|).
int64_t EdgeCountOracle(std::span<const int> group_sizes, int representatives);

std::vector<int> GroupSizes(std::span<const int> group_of);

// Structural invariants: no self loops, no duplicates, complete intra-group
// connectivity. Returns an empty string when valid, else the first violation.
std::string ValidateSkeleton(const SkeletonGraph& graph);
bool IsWeaklyConnected(const SkeletonGraph& graph);

// Debug text format:
//   n <n>
//   groups <g_0> <g_1> ... <g_{n-1}>
//   <sender> <receiver>      (one line per directed edge)
std::string ToEdgeList(const SkeletonGraph& graph);
SkeletonGraph ParseEdgeList(const std::string& text);

}  // namespace mars

#endif  // MARS_SKELETON_H_
