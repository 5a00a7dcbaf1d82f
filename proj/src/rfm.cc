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

#include "mars/rfm.h"

#include <array>
#include <cmath>

#include "mars/errors.h"
#include "mars/layers.h"
#include "mars/rng.h"

namespace mars {

void RfmConfig::Validate() const {
  if (node_dim < 1 || edge_dim < 1 || global_dim < 1 || hidden_dim < 1) {
    throw ConfigError("rfm dimensions must be >= 1");
  }
  if (rounds < 1) throw ConfigError("rfm.rounds must be >= 1");
  if (position_dim < 1) throw ConfigError("rfm.position_dim must be >= 1");
}

ParameterSet InitRfmParameters(const RfmConfig& c, uint64_t seed) {
  c.Validate();
  ParameterSet params(seed);
  Rng rng(seed);
  const std::array<int, 3> edge = {c.edge_dim + 2 * c.node_dim + c.global_dim,
                                   c.hidden_dim, c.edge_dim};
  const std::array<int, 3> node = {c.edge_dim + c.node_dim + c.global_dim,
                                   c.hidden_dim, c.node_dim};
  const std::array<int, 3> global = {c.edge_dim + c.node_dim + c.global_dim,
                                     c.hidden_dim, c.global_dim};
  InitMlp(params, "edge", edge, rng);
  InitMlp(params, "node", node, rng);
  InitMlp(params, "global", global, rng);
  Tensor unknown({c.node_dim});
  for (double& v : unknown.values()) v = rng.Uniform(-1.0, 1.0);
  params.Add("unknown", std::move(unknown));
  const double bound = 1.0 / std::sqrt(static_cast<double>(c.position_dim));
  Tensor pos({c.position_dim, c.node_dim});
  for (double& v : pos.values()) v = rng.Uniform(-bound, bound);
  params.Add("position.w", std::move(pos));
  return params;
}

Var EdgeUpdate(Tape& tape, Var edges, Var receivers, Var senders, Var u_rows,
               const ParameterSet& params) {
  const std::array<Var, 4> parts = {edges, receivers, senders, u_rows};
  return Mlp(tape, tape.ConcatCols(parts), params, "edge", 2);
}

Var NodeUpdate(Tape& tape, Var aggregated, Var nodes, Var u_rows,
               const ParameterSet& params) {
  const std::array<Var, 3> parts = {aggregated, nodes, u_rows};
  return Mlp(tape, tape.ConcatCols(parts), params, "node", 2);
}

Var GlobalUpdate(Tape& tape, Var edge_sum, Var node_sum, Var globals,
                 const ParameterSet& params) {
  const std::array<Var, 3> parts = {edge_sum, node_sum, globals};
  return Mlp(tape, tape.ConcatCols(parts), params, "global", 2);
}

GraphBatch GraphBatch::FromGraphs(std::span<const SkeletonGraph* const> graphs) {
  GraphBatch b;
  for (const SkeletonGraph* g : graphs) {
    for (const Edge& e : g->edges) {
      b.senders.push_back(b.num_nodes + e.sender);
      b.receivers.push_back(b.num_nodes + e.receiver);
      b.edge_graph.push_back(b.num_graphs);
    }
    for (int i = 0; i < g->n; ++i) b.node_graph.push_back(b.num_graphs);
    b.num_nodes += g->n;
    ++b.num_graphs;
  }
  return b;
}

GraphVars MessagePass(Tape& tape, GraphVars state, const GraphBatch& batch,
                      const RfmConfig& config, const ParameterSet& params) {
  if (config.rounds < 1) throw ConfigError("rfm.rounds must be >= 1");
  const Tensor& v0 = tape.value(state.nodes);
  const Tensor& e0 = tape.value(state.edges);
  const Tensor& u0 = tape.value(state.globals);
  if (v0.rows() != batch.num_nodes || e0.rows() != batch.num_edges() ||
      u0.rows() != batch.num_graphs) {
    throw UsageError("message_pass: graph state is not aligned with the graph");
  }
  if (v0.cols() != config.node_dim || e0.cols() != config.edge_dim ||
      u0.cols() != config.global_dim) {
    throw ConfigError("message_pass: feature widths do not match configuration");
  }
  const Var u_initial = state.globals;
  for (int round = 0; round < config.rounds; ++round) {
    const Var u_in = config.global_feedback ? state.globals : u_initial;
    Var e_new = EdgeUpdate(tape, state.edges, tape.GatherRows(state.nodes, batch.receivers),
                           tape.GatherRows(state.nodes, batch.senders),
                           tape.GatherRows(u_in, batch.edge_graph), params);
    Var aggregated = tape.SegmentSum(e_new, batch.receivers, batch.num_nodes);
    Var v_new = NodeUpdate(tape, aggregated, state.nodes,
                           tape.GatherRows(u_in, batch.node_graph), params);
    Var u_new = GlobalUpdate(tape, tape.SegmentSum(e_new, batch.edge_graph, batch.num_graphs),
                             tape.SegmentSum(v_new, batch.node_graph, batch.num_graphs),
                             u_in, params);
    state = {v_new, e_new, u_new};
  }
  return state;
}

Var InitialNodes(Tape& tape, const Tensor& embeddings, const Tensor& positions,
                 std::span<const int> has_embedding, const ParameterSet& params) {
  const int n = embeddings.rows();
  if (positions.rows() != n || static_cast<int>(has_embedding.size()) != n) {
    throw ConfigError("initial nodes: one embedding, position and flag per node");
  }
  Tensor known({n, 1}), unknown({n, 1});
  for (int i = 0; i < n; ++i) {
    known[i] = has_embedding[i] ? 1.0 : 0.0;
    unknown[i] = has_embedding[i] ? 0.0 : 1.0;
  }
  Var emb = tape.Constant(Tensor({n, embeddings.cols()}, embeddings.values()));
  Var pos = tape.Constant(Tensor({n, positions.cols()}, positions.values()));
  Var fill = tape.AddBias(tape.MatMul(pos, tape.Param(params, "position.w")),
                          tape.Param(params, "unknown"));
  return tape.Add(tape.MulColumn(emb, tape.Constant(std::move(known))),
                  tape.MulColumn(fill, tape.Constant(std::move(unknown))));
}

GraphVars ZeroGraphFeatures(Tape& tape, Var nodes, const GraphBatch& batch,
                            const RfmConfig& config) {
  return {nodes, tape.Constant(Tensor({batch.num_edges(), config.edge_dim})),
          tape.Constant(Tensor({batch.num_graphs, config.global_dim}))};
}

Var RelationalEmbeddings(Tape& tape, const GraphVars& out, const GraphBatch& batch) {
  const std::array<Var, 2> parts = {out.nodes,
                                    tape.GatherRows(out.globals, batch.node_graph)};
  return tape.ConcatCols(parts);
}

GraphState MessagePass(const GraphState& state, const SkeletonGraph& graph,
                       const RfmConfig& config, const ParameterSet& params) {
  const SkeletonGraph* g = &graph;
  const GraphBatch batch = GraphBatch::FromGraphs(std::span(&g, 1));
  Tape tape(false);
  auto as_matrix = [](const Tensor& t) {
    return Tensor({t.rows(), t.cols()}, t.values());
  };
  if (state.edges.rows() != batch.num_edges() && state.edges.size() != 0) {
    throw UsageError("message_pass: edge features are not aligned with the graph");
  }
  GraphVars in{tape.Constant(as_matrix(state.nodes)),
               tape.Constant(state.edges.size() == 0
                                 ? Tensor({batch.num_edges(), config.edge_dim})
                                 : as_matrix(state.edges)),
               tape.Constant(as_matrix(state.global))};
  GraphVars out = MessagePass(tape, in, batch, config, params);
  return {tape.value(out.nodes), tape.value(out.edges), tape.value(out.globals)};
}

}  // namespace mars
