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

#ifndef MARS_AGENT_MODEL_H_
#define MARS_AGENT_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mars/env.h"
#include "mars/optim.h"
#include "mars/parameters.h"
#include "mars/tape.h"
#include "mars/tensor.h"

namespace mars {

// What the action head predicts: the agent's own current action, or the
// current actions of every other agent (in index order).
enum class TargetMode { kOwnAction, kTeammateActions };

std::string TargetModeName(TargetMode m);
TargetMode ParseTargetMode(const std::string& name);

struct AgentModelConfig {
  int obs_dim = 9;
  int n_actions = kNumActions;
  int n_agents = 3;  // only used by kTeammateActions
  int hidden_dim = 32;
  int embed_dim = 32;
  int decoder_hidden = 32;
  TargetMode target_mode = TargetMode::kOwnAction;

  void Validate() const;
  int InputDim() const { return obs_dim + n_actions; }
  int NumActionTargets() const {
    return target_mode == TargetMode::kOwnAction ? 1 : n_agents - 1;
  }
};

// Parameter ids: "enc.*" (recurrent cell over (o^k, a^{k-1})), "proj.*"
// (hidden -> embedding), "dec_obs.*" and "dec_act.*" (two-layer decoders).
ParameterSet InitAgentModelParameters(const AgentModelConfig& config,
                                      uint64_t seed);

// h_i^t: observations o^1..o^t with the action taken before each; the first
// previous action is absent (-1, encoded as the zero vector).
struct Trajectory {
  std::vector<Observation> observations;
  std::vector<int> prev_actions;

  void Append(Observation obs, int prev_action);
  int length() const { return static_cast<int>(observations.size()); }
  Trajectory Prefix(int t) const;
};

// Encoder input row: [o, one_hot(prev_action)].
void FillStepInput(std::span<const double> obs, int prev_action, int n_actions,
                   std::span<double> out);

std::vector<double> Encode(const Trajectory& traj, const ParameterSet& params,
                           const AgentModelConfig& config);

struct Decoded {
  std::vector<double> observation;
  std::vector<double> action_logits;  // NumActionTargets() * n_actions
};
Decoded Decode(std::span<const double> embedding, const ParameterSet& params,
               const AgentModelConfig& config);

struct EdLossValue {
  double total = 0.0;
  double reconstruction = 0.0;
  double action = 0.0;
};

// ||dec_obs(e) - o^t||^2 - sum_k log p(a_k^t | dec_act(e)) with e = enc(h^t).
EdLossValue EdLoss(const Trajectory& traj, std::span<const double> target_obs,
                   std::span<const int> target_actions, const ParameterSet& params,
                   const AgentModelConfig& config);

// Time-major batch of equal-length (padded) sequences for BPTT training.
struct SequenceBatch {
  int num_sequences = 0;
  int length = 0;
  std::vector<Tensor> inputs;         // per t: [S x input_dim]
  std::vector<Tensor> target_obs;     // per t: [S x obs_dim]
  std::vector<std::vector<int>> target_actions;  // per t: S * NumActionTargets
  std::vector<Tensor> mask;           // per t: [S x 1], 1 for real steps
};

struct EdLossVars {
  Var total;  // mean over unmasked steps of reconstruction + action terms
  double reconstruction = 0.0;
  double action = 0.0;
  double steps = 0.0;
};

EdLossVars EdLossSequences(Tape& tape, const SequenceBatch& batch,
                           const ParameterSet& params,
                           const AgentModelConfig& config);

// A trajectory with the action targets of each of its steps; the
// reconstruction target of step t is the step's own observation.
struct LabeledSequence {
  Trajectory trajectory;
  std::vector<std::vector<int>> action_targets;
};

SequenceBatch MakeSequenceBatch(std::span<const LabeledSequence> sequences,
                                const AgentModelConfig& config);

// One optimizer step on the mean loss of `batch` (group "agent_model").
EdLossValue EdTrainStep(ParameterSet& params, Adam& adam, const SequenceBatch& batch,
                        const AgentModelConfig& config, double learning_rate,
                        double max_grad_norm);

// Incremental encoder for rollouts: one hidden row per tracked agent.
class EncoderState {
 public:
  EncoderState(int num_agents, int hidden_dim);
  // Consumes one (observation, previous action) per agent and returns the
  // embeddings [num_agents x embed_dim].
  Tensor Step(const Tensor& inputs, const ParameterSet& params);
  const Tensor& hidden() const { return hidden_; }

 private:
  Tensor hidden_;
};

}  // namespace mars

#endif  // MARS_AGENT_MODEL_H_
