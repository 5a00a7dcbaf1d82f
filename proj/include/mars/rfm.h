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

#ifndef MARS_RFM_H_
#define MARS_RFM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "mars/parameters.h"
#include "mars/skeleton.h"
#include "mars/tape.h"
#include "mars/tensor.h"

namespace mars {

// Relational forward model: graph-network message passing with edge, node
// and global update functions, each a one-hidden-layer tanh network, and
// elementwise-sum aggregations.
struct RfmConfig {
  int node_dim = 32;
  int edge_dim = 32;
  int global_dim = 32;
  int hidden_dim = 32;
  int rounds = 2;
  // Width of the per-node position features used to initialize agents whose
  // embedding is unavailable.
  int position_dim = 2;
  // When false, every round reads the initial global feature instead of the
  // previous round's output.
  bool global_feedback = true;

  void Validate() const;
  // Width of the per-agent relational embedding: node feature + global.
  int OutputDim() const { return node_dim + global_dim; }
};

// Parameter ids: "edge.{0,1}.{w,b}", "node.{0,1}.{w,b}", "global.{0,1}.{w,b}",
// "unknown" [node_dim] and "position.w" [position_dim x node_dim].
ParameterSet InitRfmParameters(const RfmConfig& config, uint64_t seed);

// e'_k = phi_e(e_k, v_receiver, v_sender, u). Row k of each input belongs to
// edge k; `u_rows` holds the global feature of each edge's graph.
Var EdgeUpdate(Tape& tape, Var edges, Var receivers, Var senders, Var u_rows,
               const ParameterSet& params);
// v'_i = phi_v(aggregated incoming e'_i, v_i, u).
Var NodeUpdate(Tape& tape, Var aggregated, Var nodes, Var u_rows,
               const ParameterSet& params);
// u' = phi_u(sum of e', sum of v', u).
Var GlobalUpdate(Tape& tape, Var edge_sum, Var node_sum, Var globals,
                 const ParameterSet& params);

// Disjoint union of graphs with globally numbered nodes.
struct GraphBatch {
  int num_nodes = 0;
  int num_graphs = 0;
  std::vector<int> senders;
  std::vector<int> receivers;
  std::vector<int> edge_graph;
  std::vector<int> node_graph;

  static GraphBatch FromGraphs(std::span<const SkeletonGraph* const> graphs);
  int num_edges() const { return static_cast<int>(senders.size()); }
};

struct GraphVars {
  Var nodes;    // [num_nodes x node_dim]
  Var edges;    // [num_edges x edge_dim]
  Var globals;  // [num_graphs x global_dim]
};

GraphVars MessagePass(Tape& tape, GraphVars state, const GraphBatch& batch,
                      const RfmConfig& config, const ParameterSet& params);

// Initial node features. Rows with mask 1 take their embedding row; rows with
// mask 0 take the learned unknown-agent vector plus a learned projection of
// their position features.
Var InitialNodes(Tape& tape, const Tensor& embeddings, const Tensor& positions,
                 std::span<const int> has_embedding, const ParameterSet& params);

// Zero edge and global features for `batch`, as used at the start of passing.
GraphVars ZeroGraphFeatures(Tape& tape, Var nodes, const GraphBatch& batch,
                            const RfmConfig& config);

// [v'_i, u'_{graph(i)}] per node.
Var RelationalEmbeddings(Tape& tape, const GraphVars& out, const GraphBatch& batch);

// Tensor-level graph state for a single graph.
struct GraphState {
  Tensor nodes;
  Tensor edges;
  Tensor global;
};

GraphState MessagePass(const GraphState& state, const SkeletonGraph& graph,
                       const RfmConfig& config, const ParameterSet& params);

}  // namespace mars

#endif  // MARS_RFM_H_
