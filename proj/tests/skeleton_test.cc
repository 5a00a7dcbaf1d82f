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

#include <algorithm>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "gtest/gtest.h"
#include "mars/errors.h"
#include "mars/rng.h"
#include "mars/skeleton.h"

namespace mars {
namespace {

std::vector<int> GroupMap(const std::vector<int>& sizes) {
  std::vector<int> out;
  for (size_t g = 0; g < sizes.size(); ++g) out.insert(out.end(), sizes[g], static_cast<int>(g));
  return out;
}

// Builds the edge set with the first min(r, |g|) members of every group as
// representatives and counts it.
int64_t EnumeratedCount(const std::vector<int>& sizes, int r) {
  const std::vector<int> group_of = GroupMap(sizes);
  std::set<std::pair<int, int>> edges;
  const int n = static_cast<int>(group_of.size());
  std::vector<int> rank(n);
  std::map<int, int> seen;
  for (int i = 0; i < n; ++i) rank[i] = seen[group_of[i]]++;
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      if (group_of[u] == group_of[v] || (rank[u] < r && rank[v] < r)) edges.insert({u, v});
    }
  }
  return static_cast<int64_t>(edges.size());
}

std::vector<int> RandomPartition(Rng& rng, int max_n, int max_groups) {
  const int m = 1 + rng.UniformInt(max_groups);
  const int n = m + rng.UniformInt(max_n - m + 1);
  std::vector<int> group_of(n);
  for (int g = 0; g < m; ++g) group_of[g] = g;
  for (int i = m; i < n; ++i) group_of[i] = rng.UniformInt(m);
  rng.Shuffle(group_of);
  return group_of;
}

// Checks every structural property of a skeleton built from `group_of`.
void ExpectValidSkeleton(const SkeletonGraph& g, const std::vector<int>& group_of, int r) {
  ASSERT_EQ(g.n, static_cast<int>(group_of.size()));
  std::set<std::pair<int, int>> edges;
  for (const Edge& e : g.edges) {
    EXPECT_NE(e.sender, e.receiver);
    EXPECT_TRUE(edges.insert({e.sender, e.receiver}).second) << "duplicate edge";
  }
  for (int u = 0; u < g.n; ++u) {
    for (int v = 0; v < g.n; ++v) {
      if (u != v && group_of[u] == group_of[v]) EXPECT_TRUE(edges.count({u, v}));
    }
  }
  // Per group pair, cross edges must be the full bidirectional product of two
  // representative sets of the clamped sizes.
  const std::vector<int> sizes = GroupSizes(group_of);
  const int m = static_cast<int>(sizes.size());
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      std::set<int> reps_a, reps_b;
      int count = 0;
      for (const auto& [u, v] : edges) {
        if (group_of[u] == a && group_of[v] == b) {
          reps_a.insert(u);
          reps_b.insert(v);
          ++count;
          EXPECT_TRUE(edges.count({v, u}));
        }
      }
      EXPECT_EQ(static_cast<int>(reps_a.size()), std::min(r, sizes[a]));
      EXPECT_EQ(static_cast<int>(reps_b.size()), std::min(r, sizes[b]));
      EXPECT_EQ(count, static_cast<int>(reps_a.size() * reps_b.size()));
    }
  }
  EXPECT_TRUE(IsWeaklyConnected(g));
  EXPECT_EQ(ValidateSkeleton(g), "");
}

TEST(SkeletonTest, SingleGroupIsCompleteDigraph) {
  for (int k = 1; k <= 6; ++k) {
    Rng rng(k);
    const std::vector<int> group_of(k, 0);
    SkeletonGraph g = BuildSkeleton(group_of, 1, rng);
    EXPECT_EQ(static_cast<int>(g.edges.size()), k * (k - 1));
    EXPECT_EQ(g.SortedEdges(), BuildFullGraph(k).SortedEdges());
  }
}

TEST(SkeletonTest, ThreeTwoWithOneRepresentative) {
  Rng rng(1);
  const auto group_of = GroupMap({3, 2});
  SkeletonGraph g = BuildSkeleton(group_of, 1, rng);
  EXPECT_EQ(g.edges.size(), 10u);
  EXPECT_EQ(EdgeCountOracle(std::vector<int>{3, 2}, 1), 10);
  EXPECT_EQ(EnumeratedCount({3, 2}, 1), 10);
}

TEST(SkeletonTest, TwoSingletonsAnyR) {
  for (int r = 1; r <= 4; ++r) {
    Rng rng(r);
    SkeletonGraph g = BuildSkeleton(GroupMap({1, 1}), r, rng);
    EXPECT_EQ(g.edges.size(), 2u);
  }
}

TEST(SkeletonTest, ThreePairs) {
  EXPECT_EQ(EdgeCountOracle(std::vector<int>{2, 2, 2}, 1), 12);
  EXPECT_EQ(EnumeratedCount({2, 2, 2}, 1), 12);
  Rng rng(3);
  EXPECT_EQ(BuildSkeleton(GroupMap({2, 2, 2}), 1, rng).edges.size(), 12u);
}

TEST(SkeletonTest, FullGraphCounts) {
  EXPECT_EQ(BuildFullGraph(1).edges.size(), 0u);
  EXPECT_EQ(BuildFullGraph(3).edges.size(), 6u);
}

TEST(SkeletonTest, EmptyGroupIsConfigError) {
  Rng rng(1);
  const std::vector<int> gap = {0, 0, 2};
  EXPECT_THROW(BuildSkeleton(gap, 1, rng), ConfigError);
  const std::vector<int> ok = {0, 1};
  EXPECT_THROW(BuildSkeleton(ok, 0, rng), ConfigError);
}

TEST(SkeletonTest, OracleMatchesEnumeration) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<int> group_of = RandomPartition(rng, 12, 5);
    const std::vector<int> sizes = GroupSizes(group_of);
    const int r = 1 + rng.UniformInt(4);
    EXPECT_EQ(EdgeCountOracle(sizes, r), EnumeratedCount(sizes, r));
  }
}

TEST(SkeletonPropertyTest, RandomPartitionsSatisfyInvariants) {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::vector<int> group_of = RandomPartition(rng, 12, 5);
    const int r = 1 + rng.UniformInt(3);
    SkeletonGraph g = BuildSkeleton(group_of, r, rng);
    ExpectValidSkeleton(g, group_of, r);
    EXPECT_EQ(static_cast<int64_t>(g.edges.size()), EdgeCountOracle(GroupSizes(group_of), r));
    if (HasFailure()) {
      ADD_FAILURE() << "trial " << trial << "\n" << ToEdgeList(g);
      return;
    }
  }
}

TEST(SkeletonPropertyTest, InterGroupSparsity) {
  for (int m = 2; m <= 5; ++m) {
    for (int g0 = 1; g0 <= 4; ++g0) {
      const std::vector<int> sizes(m, g0);
      const int64_t intra = static_cast<int64_t>(m) * g0 * (g0 - 1);
      const int64_t inter = EdgeCountOracle(sizes, 1) - intra;
      EXPECT_EQ(inter, m * (m - 1));
      const int64_t complete_inter = static_cast<int64_t>(m) * (m - 1) * g0 * g0;
      if (g0 >= 2) {
        EXPECT_LT(inter, complete_inter);
      } else {
        EXPECT_EQ(inter, complete_inter);
      }
    }
  }
}

TEST(SkeletonPropertyTest, ResamplingKeepsCount) {
  const auto group_of = GroupMap({3, 4, 2, 3});
  std::set<std::vector<Edge>> distinct;
  for (uint64_t s = 0; s < 30; ++s) {
    Rng rng(s);
    SkeletonGraph g = BuildSkeleton(group_of, 1, rng);
    EXPECT_EQ(g.edges.size(), static_cast<size_t>(EdgeCountOracle(GroupSizes(group_of), 1)));
    distinct.insert(g.SortedEdges());
  }
  EXPECT_GT(distinct.size(), 1u);
  Rng a(5), b(5);
  EXPECT_EQ(BuildSkeleton(group_of, 1, a).edges, BuildSkeleton(group_of, 1, b).edges);
}

TEST(SkeletonTest, EdgeListRoundTrip) {
  Rng rng(9);
  SkeletonGraph g = BuildSkeleton(GroupMap({2, 3, 1}), 2, rng);
  SkeletonGraph back = ParseEdgeList(ToEdgeList(g));
  EXPECT_EQ(back.n, g.n);
  EXPECT_EQ(back.group_of, g.group_of);
  EXPECT_EQ(back.edges, g.edges);
  EXPECT_THROW(ParseEdgeList("groups 0 1\n"), ConfigError);
}

TEST(SkeletonTest, ValidatorFlagsViolations) {
  SkeletonGraph g = BuildFullGraph(3);
  g.edges.push_back({1, 1});
  EXPECT_NE(ValidateSkeleton(g), "");
  SkeletonGraph dup = BuildFullGraph(3);
  dup.edges.push_back(dup.edges.front());
  EXPECT_NE(ValidateSkeleton(dup), "");
  SkeletonGraph missing = BuildFullGraph(3);
  missing.edges.pop_back();
  EXPECT_NE(ValidateSkeleton(missing), "");
}

}  // namespace
}  // namespace mars
