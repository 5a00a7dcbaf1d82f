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

#include "mars/grad_suite.h"

#include <array>
#include <cmath>
#include <memory>

#include "mars/errors.h"
#include "mars/rng.h"

namespace mars {
namespace {

Tensor RandomMatrix(int rows, int cols, Rng& rng) {
  Tensor t({rows, cols});
  for (double& v : t.values()) v = rng.Uniform(-1.0, 1.0);
  return t;
}

// Only the tensors under `prefix`.
ParameterSet Subset(const ParameterSet& all, const std::string& prefix) {
  ParameterSet out(all.seed());
  for (const auto& [id, t] : all.entries()) {
    if (id.rfind(prefix + ".", 0) == 0) out.Add(id, t);
  }
  return out;
}

// A random weighted sum keeps every output coordinate in the loss.
Var Project(Tape& tape, Var out, const Tensor& weights) {
  return tape.Sum(tape.Mul(out, tape.Constant(weights)));
}

std::vector<StepRecord> RandomSteps(const ModelSpec& spec, int count, Rng& rng) {
  std::vector<StepRecord> steps;
  const int n = 3;
  for (int k = 0; k < count; ++k) {
    StepRecord s;
    s.n = n;
    s.controlled = {1, 0, 1};
    s.base = RandomMatrix(n, spec.BaseDim(), rng);
    s.embeddings = Tensor({n, 0});
    s.has_embedding.assign(n, 0);
    s.positions = Tensor({n, 0});
    for (int i = 0; i < n; ++i) {
      s.actions.push_back(rng.UniformInt(spec.n_actions));
      s.old_log_probs.push_back(std::log(1.0 / spec.n_actions) + rng.Uniform(-0.1, 0.1));
      s.old_values.push_back(rng.Uniform(-1.0, 1.0));
      s.advantages.push_back(rng.Uniform(-1.0, 1.0));
      s.returns.push_back(rng.Uniform(-1.0, 1.0));
    }
    steps.push_back(std::move(s));
  }
  return steps;
}

}  // namespace

const std::vector<std::string>& GradSuiteNetworks() {
  static const std::vector<std::string> names = {"encoder_decoder", "rfm_edge", "rfm_node",
                                                 "rfm_global", "actor", "critic"};
  return names;
}

GradSuiteResult CheckNetwork(const std::string& network, const ModelSpec& spec_in,
                             uint64_t seed) {
  ModelSpec spec = spec_in;
  spec.variant = Variant::kIppoMaht;
  Rng rng(DeriveSeed(seed, {0x6c}));
  GradSuiteResult r;
  r.network = network;
  r.seed = seed;
  const RfmConfig& rc = spec.rfm;

  if (network == "encoder_decoder") {
    AgentModelConfig c = spec.agent_model;
    c.obs_dim = spec.obs_dim;
    ParameterSet p = InitAgentModelParameters(c, seed);
    std::vector<LabeledSequence> seqs(2);
    for (int k = 0; k < 2; ++k) {
      for (int t = 0; t < 3 + k; ++t) {
        Observation o(c.obs_dim);
        for (double& v : o) v = rng.Uniform(-1.0, 1.0);
        seqs[k].trajectory.Append(o, t == 0 ? -1 : rng.UniformInt(c.n_actions));
        std::vector<int> targets;
        for (int a = 0; a < c.NumActionTargets(); ++a) targets.push_back(rng.UniformInt(c.n_actions));
        seqs[k].action_targets.push_back(targets);
      }
    }
    const SequenceBatch batch = MakeSequenceBatch(seqs, c);
    ParameterSet* sets[] = {&p};
    const std::string names[] = {"agent_model"};
    r.entries = CompareWithFiniteDifferences(
        sets, names, [&](Tape& tape) { return EdLossSequences(tape, batch, p, c).total; });
  } else if (network == "rfm_edge" || network == "rfm_node" || network == "rfm_global") {
    const ParameterSet all = InitRfmParameters(rc, seed);
    const int rows = 4;
    if (network == "rfm_edge") {
      ParameterSet p = Subset(all, "edge");
      const Tensor e = RandomMatrix(rows, rc.edge_dim, rng), vr = RandomMatrix(rows, rc.node_dim, rng),
                   vs = RandomMatrix(rows, rc.node_dim, rng), u = RandomMatrix(rows, rc.global_dim, rng),
                   w = RandomMatrix(rows, rc.edge_dim, rng);
      ParameterSet* sets[] = {&p};
      const std::string names[] = {"rfm"};
      r.entries = CompareWithFiniteDifferences(sets, names, [&](Tape& tape) {
        return Project(tape, EdgeUpdate(tape, tape.Constant(e), tape.Constant(vr),
                                        tape.Constant(vs), tape.Constant(u), p), w);
      });
    } else if (network == "rfm_node") {
      ParameterSet p = Subset(all, "node");
      const Tensor agg = RandomMatrix(rows, rc.edge_dim, rng), v = RandomMatrix(rows, rc.node_dim, rng),
                   u = RandomMatrix(rows, rc.global_dim, rng), w = RandomMatrix(rows, rc.node_dim, rng);
      ParameterSet* sets[] = {&p};
      const std::string names[] = {"rfm"};
      r.entries = CompareWithFiniteDifferences(sets, names, [&](Tape& tape) {
        return Project(tape, NodeUpdate(tape, tape.Constant(agg), tape.Constant(v),
                                        tape.Constant(u), p), w);
      });
    } else {
      ParameterSet p = Subset(all, "global");
      const Tensor es = RandomMatrix(1, rc.edge_dim, rng), vs = RandomMatrix(1, rc.node_dim, rng),
                   u = RandomMatrix(1, rc.global_dim, rng), w = RandomMatrix(1, rc.global_dim, rng);
      ParameterSet* sets[] = {&p};
      const std::string names[] = {"rfm"};
      r.entries = CompareWithFiniteDifferences(sets, names, [&](Tape& tape) {
        return Project(tape, GlobalUpdate(tape, tape.Constant(es), tape.Constant(vs),
                                          tape.Constant(u), p), w);
      });
    }
  } else if (network == "actor" || network == "critic") {
    ModelParameters params = InitModelParameters(spec, seed);
    // Break the near-zero output initialization so the check sees real curvature.
    for (double& v : params.actor.GetMutable("actor.2.w").values()) v = rng.Uniform(-0.5, 0.5);
    const std::vector<StepRecord> steps = RandomSteps(spec, 4, rng);
    std::vector<const StepRecord*> ptrs;
    for (const StepRecord& s : steps) ptrs.push_back(&s);
    const bool actor = network == "actor";
    ParameterSet* sets[] = {actor ? &params.actor : &params.critic};
    const std::string names[] = {network};
    r.entries = CompareWithFiniteDifferences(sets, names, [&](Tape& tape) {
      LossVars l = BuildLosses(tape, spec, params, ptrs);
      return actor ? l.actor : l.critic;
    });
  } else {
    throw UsageError("unknown network '" + network + "' for gradient check");
  }
  r.max_error = MaxError(r.entries);
  return r;
}

std::vector<GradSuiteResult> RunGradSuite(const ModelSpec& spec, int inits) {
  std::vector<GradSuiteResult> out;
  for (const std::string& name : GradSuiteNetworks()) {
    for (int s = 1; s <= inits; ++s) out.push_back(CheckNetwork(name, spec, s));
  }
  return out;
}

}  // namespace mars
