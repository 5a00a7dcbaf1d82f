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

#include "mars/skeleton.h"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "mars/errors.h"

namespace mars {
namespace {

std::vector<std::vector<int>> Members(std::span<const int> group_of) {
  int groups = 0;
  for (int g : group_of) {
    if (g < 0) throw ConfigError("skeleton: negative group index");
    groups = std::max(groups, g + 1);
  }
  std::vector<std::vector<int>> members(groups);
  for (int i = 0; i < static_cast<int>(group_of.size()); ++i) {
    members[group_of[i]].push_back(i);
  }
  for (int g = 0; g < groups; ++g) {
    if (members[g].empty()) {
      throw ConfigError("skeleton: group " + std::to_string(g) + " is empty");
    }
  }
  return members;
}

std::vector<int> SampleRepresentatives(std::vector<int> members, int r, Rng& rng) {
  const int k = std::min<int>(r, static_cast<int>(members.size()));
  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  for (int i = 0; i < k; ++i) {
    const int j = i + rng.UniformInt(static_cast<int>(members.size()) - i);
    std::swap(members[i], members[j]);
  }
  members.resize(k);
  return members;
}

}  // namespace

int SkeletonGraph::NumGroups() const {
  int m = 0;
  for (int g : group_of) m = std::max(m, g + 1);
  return m;
}

std::vector<Edge> SkeletonGraph::SortedEdges() const {
  std::vector<Edge> e = edges;
  std::sort(e.begin(), e.end());
  return e;
}

SkeletonGraph BuildSkeleton(std::span<const int> group_of, int representatives,
                            Rng& rng) {
  if (representatives < 1) throw ConfigError("skeleton: representatives must be >= 1");
  const auto members = Members(group_of);
  SkeletonGraph graph;
  graph.n = static_cast<int>(group_of.size());
  graph.group_of.assign(group_of.begin(), group_of.end());
  for (const auto& group : members) {
    for (int u : group) {
      for (int v : group) {
        if (u != v) graph.edges.push_back({u, v});
      }
    }
  }
  const int m = static_cast<int>(members.size());
  for (int g = 0; g < m; ++g) {
    for (int h = g + 1; h < m; ++h) {
      const auto reps_g = SampleRepresentatives(members[g], representatives, rng);
      const auto reps_h = SampleRepresentatives(members[h], representatives, rng);
      for (int a : reps_g) {
        for (int b : reps_h) {
          graph.edges.push_back({a, b});
          graph.edges.push_back({b, a});
        }
      }
    }
  }
  return graph;
}

SkeletonGraph BuildFullGraph(int n) {
  if (n < 1) throw ConfigError("full graph: n must be >= 1");
  SkeletonGraph graph;
  graph.n = n;
  graph.group_of.assign(n, 0);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (u != v) graph.edges.push_back({u, v});
    }
  }
  return graph;
}

int64_t EdgeCountOracle(std::span<const int> group_sizes, int representatives) {
  int64_t total = 0;
  for (int s : group_sizes) total += static_cast<int64_t>(s) * (s - 1);
  for (size_t g = 0; g < group_sizes.size(); ++g) {
    for (size_t h = g + 1; h < group_sizes.size(); ++h) {
      total += 2LL * std::min(representatives, group_sizes[g]) *
               std::min(representatives, group_sizes[h]);
    }
  }
  return total;
}

std::vector<int> GroupSizes(std::span<const int> group_of) {
  std::vector<int> sizes;
  for (int g : group_of) {
    if (g >= static_cast<int>(sizes.size())) sizes.resize(g + 1, 0);
    ++sizes[g];
  }
  return sizes;
}

std::string ValidateSkeleton(const SkeletonGraph& graph) {
  if (static_cast<int>(graph.group_of.size()) != graph.n) {
    return "group map size differs from n";
  }
  std::set<Edge> seen;
  for (const Edge& e : graph.edges) {
    if (e.sender < 0 || e.sender >= graph.n || e.receiver < 0 ||
        e.receiver >= graph.n) {
      return "edge endpoint out of range";
    }
    if (e.sender == e.receiver) return "self loop at " + std::to_string(e.sender);
    if (!seen.insert(e).second) {
      return "duplicate edge " + std::to_string(e.sender) + "->" +
             std::to_string(e.receiver);
    }
  }
  for (int u = 0; u < graph.n; ++u) {
    for (int v = 0; v < graph.n; ++v) {
      if (u != v && graph.group_of[u] == graph.group_of[v] && !seen.count({u, v})) {
        return "missing intra-group edge " + std::to_string(u) + "->" +
               std::to_string(v);
      }
    }
  }
  return "";
}

bool IsWeaklyConnected(const SkeletonGraph& graph) {
  if (graph.n <= 1) return true;
  std::vector<int> parent(graph.n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Edge& e : graph.edges) parent[find(e.sender)] = find(e.receiver);
  const int root = find(0);
  for (int i = 1; i < graph.n; ++i) {
    if (find(i) != root) return false;
  }
  return true;
}

std::string ToEdgeList(const SkeletonGraph& graph) {
  std::ostringstream out;
  out << "n " << graph.n << "\ngroups";
  for (int g : graph.group_of) out << ' ' << g;
  out << '\n';
  for (const Edge& e : graph.edges) out << e.sender << ' ' << e.receiver << '\n';
  return out.str();
}

SkeletonGraph ParseEdgeList(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  SkeletonGraph graph;
  if (!(in >> tag >> graph.n) || tag != "n" || graph.n < 0) {
    throw ConfigError("edge list: expected 'n <count>' header");
  }
  if (!(in >> tag) || tag != "groups") {
    throw ConfigError("edge list: expected 'groups' line");
  }
  graph.group_of.resize(graph.n);
  for (int& g : graph.group_of) {
    if (!(in >> g)) throw ConfigError("edge list: truncated group map");
  }
  Edge e;
  while (in >> e.sender) {
    if (!(in >> e.receiver)) throw ConfigError("edge list: dangling sender");
    graph.edges.push_back(e);
  }
  return graph;
}

}  // namespace mars
