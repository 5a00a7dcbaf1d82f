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
#include <cmath>
#include <numeric>
#include <vector>

#include "gtest/gtest.h"
#include "mars/errors.h"
#include "mars/gradcheck.h"
#include "mars/layers.h"
#include "mars/rfm.h"
#include "mars/rng.h"
#include "mars/skeleton.h"

namespace mars {
namespace {

RfmConfig SmallRfm(int rounds = 2, bool feedback = true) {
  RfmConfig c;
  c.node_dim = 4;
  c.edge_dim = 3;
  c.global_dim = 2;
  c.hidden_dim = 5;
  c.rounds = rounds;
  c.global_feedback = feedback;
  return c;
}

Tensor RandomMatrix(int rows, int cols, Rng& rng) {
  Tensor t({rows, cols});
  for (double& v : t.values()) v = rng.Uniform(-1, 1);
  return t;
}

GraphState RandomState(const SkeletonGraph& g, const RfmConfig& c, Rng& rng) {
  return {RandomMatrix(g.n, c.node_dim, rng), RandomMatrix(static_cast<int>(g.edges.size()), c.edge_dim, rng),
          RandomMatrix(1, c.global_dim, rng)};
}

// Two-layer tanh network on plain vectors.
std::vector<double> RefMlp(const ParameterSet& p, const std::string& prefix,
                           const std::vector<double>& x) {
  std::vector<double> h = x;
  for (int layer = 0; layer < 2; ++layer) {
    const Tensor& w = p.Get(prefix + "." + std::to_string(layer) + ".w");
    const Tensor& b = p.Get(prefix + "." + std::to_string(layer) + ".b");
    std::vector<double> out(w.cols());
    for (int j = 0; j < w.cols(); ++j) {
      double s = b[j];
      for (int i = 0; i < w.rows(); ++i) s += h[i] * w.at(i, j);
      out[j] = layer == 0 ? std::tanh(s) : s;
    }
    h = out;
  }
  return h;
}

std::vector<double> Cat(std::initializer_list<std::vector<double>> parts) {
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<double> Row(const Tensor& t, int r) {
  auto s = t.row(r);
  return {s.begin(), s.end()};
}

SkeletonGraph Graph(int n, std::vector<Edge> edges) {
  SkeletonGraph g;
  g.n = n;
  g.edges = std::move(edges);
  g.group_of.assign(n, 0);
  return g;
}

TEST(RfmTest, ZeroParametersGiveZeroOutputs) {
  const RfmConfig c = SmallRfm();
  ParameterSet p = InitRfmParameters(c, 1);
  ZeroParameters(p);
  Tape tape(false);
  Var e = EdgeUpdate(tape, tape.Constant(Tensor({2, c.edge_dim})), tape.Constant(Tensor({2, c.node_dim})),
                     tape.Constant(Tensor({2, c.node_dim})), tape.Constant(Tensor({2, c.global_dim})), p);
  EXPECT_EQ(tape.value(e).cols(), c.edge_dim);
  for (double v : tape.value(e).values()) EXPECT_EQ(v, 0.0);
  Rng rng(2);
  SkeletonGraph g = BuildFullGraph(3);
  GraphState out = MessagePass(RandomState(g, c, rng), g, c, p);
  for (double v : out.nodes.values()) EXPECT_EQ(v, 0.0);
  for (double v : out.edges.values()) EXPECT_EQ(v, 0.0);
  for (double v : out.global.values()) EXPECT_EQ(v, 0.0);
}

TEST(RfmTest, OneRoundEqualsManualComposition) {
  const RfmConfig c = SmallRfm(1);
  const ParameterSet p = InitRfmParameters(c, 3);
  Rng rng(3);
  SkeletonGraph g = Graph(2, {{0, 1}, {1, 0}});
  GraphState s = RandomState(g, c, rng);
  GraphState out = MessagePass(s, g, c, p);
  const std::vector<double> u = Row(s.global, 0);
  std::vector<std::vector<double>> e_new(2);
  for (int k = 0; k < 2; ++k) {
    const Edge e = g.edges[k];
    e_new[k] = RefMlp(p, "edge", Cat({Row(s.edges, k), Row(s.nodes, e.receiver), Row(s.nodes, e.sender), u}));
  }
  std::vector<std::vector<double>> v_new(2);
  for (int i = 0; i < 2; ++i) {
    const int incoming = i == 1 ? 0 : 1;  // edge k has receiver 1 - k
    v_new[i] = RefMlp(p, "node", Cat({e_new[incoming], Row(s.nodes, i), u}));
  }
  std::vector<double> esum(c.edge_dim), vsum(c.node_dim);
  for (int j = 0; j < c.edge_dim; ++j) esum[j] = e_new[0][j] + e_new[1][j];
  for (int j = 0; j < c.node_dim; ++j) vsum[j] = v_new[0][j] + v_new[1][j];
  const std::vector<double> u_new = RefMlp(p, "global", Cat({esum, vsum, u}));
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < c.edge_dim; ++j) EXPECT_NEAR(out.edges.at(k, j), e_new[k][j], 1e-12);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < c.node_dim; ++j) EXPECT_NEAR(out.nodes.at(i, j), v_new[i][j], 1e-12);
  for (int j = 0; j < c.global_dim; ++j) EXPECT_NEAR(out.global[j], u_new[j], 1e-12);
}

TEST(RfmTest, NodeWithoutIncomingEdgesGetsZeroAggregate) {
  const RfmConfig c = SmallRfm(1);
  const ParameterSet p = InitRfmParameters(c, 4);
  Rng rng(4);
  SkeletonGraph g = Graph(3, {{0, 1}, {1, 0}, {2, 0}});
  GraphState s = RandomState(g, c, rng);
  GraphState out = MessagePass(s, g, c, p);
  std::vector<double> expected =
      RefMlp(p, "node", Cat({std::vector<double>(c.edge_dim, 0.0), Row(s.nodes, 2), Row(s.global, 0)}));
  for (int j = 0; j < c.node_dim; ++j) EXPECT_NEAR(out.nodes.at(2, j), expected[j], 1e-12);
}

TEST(RfmTest, EmptyEdgeSetUsesZeroEdgeSum) {
  const RfmConfig c = SmallRfm(1);
  const ParameterSet p = InitRfmParameters(c, 5);
  Rng rng(5);
  SkeletonGraph g = BuildFullGraph(1);
  GraphState s = RandomState(g, c, rng);
  GraphState out = MessagePass(s, g, c, p);
  const std::vector<double> v = Row(out.nodes, 0);
  std::vector<double> expected =
      RefMlp(p, "global", Cat({std::vector<double>(c.edge_dim, 0.0), v, Row(s.global, 0)}));
  for (int j = 0; j < c.global_dim; ++j) EXPECT_NEAR(out.global[j], expected[j], 1e-12);
}

TEST(RfmTest, IncomingEdgeOrderDoesNotMatter) {
  const RfmConfig c = SmallRfm(2);
  const ParameterSet p = InitRfmParameters(c, 6);
  Rng rng(6);
  SkeletonGraph g = BuildFullGraph(4);
  GraphState s = RandomState(g, c, rng);
  GraphState out = MessagePass(s, g, c, p);
  std::vector<int> order(g.edges.size());
  std::iota(order.begin(), order.end(), 0);
  for (int trial = 0; trial < 10; ++trial) {
    rng.Shuffle(order);
    SkeletonGraph h = g;
    GraphState t = s;
    for (size_t k = 0; k < order.size(); ++k) {
      h.edges[k] = g.edges[order[k]];
      for (int j = 0; j < c.edge_dim; ++j) t.edges.at(k, j) = s.edges.at(order[k], j);
    }
    GraphState o2 = MessagePass(t, h, c, p);
    for (size_t i = 0; i < out.nodes.size(); ++i) EXPECT_NEAR(o2.nodes[i], out.nodes[i], 1e-9);
    for (size_t i = 0; i < out.global.size(); ++i) EXPECT_NEAR(o2.global[i], out.global[i], 1e-9);
  }
}

TEST(RfmPropertyTest, RelabelingIsEquivariant) {
  const RfmConfig c = SmallRfm(2);
  const ParameterSet p = InitRfmParameters(c, 7);
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + rng.UniformInt(7);
    std::vector<int> group_of(n);
    const int m = 1 + rng.UniformInt(std::min(n, 4));
    for (int i = 0; i < n; ++i) group_of[i] = i < m ? i : rng.UniformInt(m);
    SkeletonGraph g = BuildSkeleton(group_of, 1, rng);
    GraphState s = RandomState(g, c, rng);
    GraphState out = MessagePass(s, g, c, p);
    std::vector<int> sigma(n);
    std::iota(sigma.begin(), sigma.end(), 0);
    rng.Shuffle(sigma);
    SkeletonGraph h = g;
    GraphState t = s;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < c.node_dim; ++j) t.nodes.at(sigma[i], j) = s.nodes.at(i, j);
      h.group_of[sigma[i]] = g.group_of[i];
    }
    for (auto& e : h.edges) e = {sigma[e.sender], sigma[e.receiver]};
    GraphState o2 = MessagePass(t, h, c, p);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < c.node_dim; ++j) EXPECT_NEAR(o2.nodes.at(sigma[i], j), out.nodes.at(i, j), 1e-6);
    }
    for (size_t j = 0; j < out.global.size(); ++j) EXPECT_NEAR(o2.global[j], out.global[j], 1e-6);
  }
}

TEST(RfmPropertyTest, IsolatedNodeIgnoresOthersWithoutGlobalFeedback) {
  const RfmConfig c = SmallRfm(3, false);
  const ParameterSet p = InitRfmParameters(c, 8);
  Rng rng(8);
  SkeletonGraph g = Graph(4, {{0, 1}, {1, 0}, {1, 2}, {2, 0}});
  GraphState s = RandomState(g, c, rng);
  GraphState out = MessagePass(s, g, c, p);
  for (int trial = 0; trial < 5; ++trial) {
    GraphState t = s;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < c.node_dim; ++j) t.nodes.at(i, j) = rng.Uniform(-3, 3);
    for (double& v : t.edges.values()) v = rng.Uniform(-3, 3);
    GraphState o2 = MessagePass(t, g, c, p);
    for (int j = 0; j < c.node_dim; ++j) EXPECT_EQ(o2.nodes.at(3, j), out.nodes.at(3, j));
  }
}

TEST(RfmPropertyTest, OneRoundIsLocal) {
  const RfmConfig c = SmallRfm(1);
  const ParameterSet p = InitRfmParameters(c, 9);
  Rng rng(9);
  SkeletonGraph g = Graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  GraphState s = RandomState(g, c, rng);
  GraphState out = MessagePass(s, g, c, p);
  GraphState t = s;
  for (int j = 0; j < c.node_dim; ++j) t.nodes.at(2, j) += 0.5;  // no edge 2 -> 1
  GraphState o2 = MessagePass(t, g, c, p);
  for (int j = 0; j < c.node_dim; ++j) EXPECT_EQ(o2.nodes.at(1, j), out.nodes.at(1, j));
  bool changed = false;
  for (int j = 0; j < c.node_dim; ++j) changed |= o2.nodes.at(3, j) != out.nodes.at(3, j);
  EXPECT_TRUE(changed);
}

TEST(RfmTest, Deterministic) {
  const RfmConfig c = SmallRfm();
  const ParameterSet p = InitRfmParameters(c, 10);
  EXPECT_EQ(p, InitRfmParameters(c, 10));
  Rng rng(10);
  SkeletonGraph g = BuildFullGraph(5);
  GraphState s = RandomState(g, c, rng);
  GraphState a = MessagePass(s, g, c, p);
  GraphState b = MessagePass(s, g, c, p);
  EXPECT_EQ(a.nodes, b.nodes);
  EXPECT_EQ(a.edges, b.edges);
  EXPECT_EQ(a.global, b.global);
}

TEST(RfmTest, MisalignedStateIsUsageError) {
  const RfmConfig c = SmallRfm();
  const ParameterSet p = InitRfmParameters(c, 11);
  Rng rng(11);
  SkeletonGraph g = BuildFullGraph(3);
  GraphState s = RandomState(g, c, rng);
  s.nodes = RandomMatrix(4, c.node_dim, rng);
  EXPECT_THROW(MessagePass(s, g, c, p), UsageError);
  GraphState e = RandomState(g, c, rng);
  e.edges = RandomMatrix(5, c.edge_dim, rng);
  EXPECT_THROW(MessagePass(e, g, c, p), UsageError);
}

TEST(RfmTest, UnknownNodesUseLearnedVectorAndPosition) {
  const RfmConfig c = SmallRfm();
  const ParameterSet p = InitRfmParameters(c, 12);
  Rng rng(12);
  Tensor emb = RandomMatrix(3, c.node_dim, rng);
  Tensor pos = RandomMatrix(3, 2, rng);
  const std::vector<int> has = {1, 0, 1};
  Tape tape(false);
  const Tensor& v = tape.value(InitialNodes(tape, emb, pos, has, p));
  for (int j = 0; j < c.node_dim; ++j) {
    EXPECT_EQ(v.at(0, j), emb.at(0, j));
    double expected = p.Get("unknown")[j];
    for (int k = 0; k < 2; ++k) expected += pos.at(1, k) * p.Get("position.w").at(k, j);
    EXPECT_NEAR(v.at(1, j), expected, 1e-12);
  }
}

TEST(RfmGradientTest, UpdateFunctionsMatchFiniteDifferences) {
  const RfmConfig c = SmallRfm(2);
  ParameterSet p = InitRfmParameters(c, 13);
  Rng rng(13);
  SkeletonGraph g = BuildSkeleton(std::vector<int>{0, 0, 1, 1, 2}, 1, rng);
  const SkeletonGraph* gp = &g;
  const GraphBatch batch = GraphBatch::FromGraphs(std::span(&gp, 1));
  Tensor emb = RandomMatrix(5, c.node_dim, rng);
  Tensor pos = RandomMatrix(5, 2, rng);
  const std::vector<int> has = {1, 1, 0, 0, 1};
  Tensor w = RandomMatrix(5, c.OutputDim(), rng);
  ParameterSet* sets[] = {&p};
  const std::string names[] = {"rfm"};
  auto entries = CompareWithFiniteDifferences(sets, names, [&](Tape& tape) {
    Var nodes = InitialNodes(tape, emb, pos, has, p);
    GraphVars out = MessagePass(tape, ZeroGraphFeatures(tape, nodes, batch, c), batch, c, p);
    return tape.Sum(tape.Mul(RelationalEmbeddings(tape, out, batch), tape.Constant(w)));
  });
  EXPECT_EQ(entries.size(), p.entries().size());
  for (const auto& e : entries) EXPECT_LT(e.max_rel_error, 1e-4) << e.parameter;
}

}  // namespace
}  // namespace mars
