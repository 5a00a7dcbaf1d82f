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

#include "mars/agent_model.h"

#include <algorithm>
#include <array>

#include "mars/errors.h"
#include "mars/layers.h"
#include "mars/rng.h"

namespace mars {
namespace {

Var Embed(Tape& tape, Var hidden, const ParameterSet& params) {
  return Dense(tape, hidden, params, "proj");
}

Var RowSumOfSquares(Tape& tape, Var diff) {
  const int cols = tape.value(diff).cols();
  return tape.MatMul(tape.Square(diff), tape.Constant(Tensor({cols, 1}, 1.0)));
}

// Negative log-likelihood per row summed over action targets, [S x 1].
Var ActionNll(Tape& tape, Var logits, const std::vector<int>& actions, int n_actions,
              int targets) {
  const int rows = tape.value(logits).rows();
  Var total{};
  for (int k = 0; k < targets; ++k) {
    std::vector<int> cols(rows);
    for (int s = 0; s < rows; ++s) cols[s] = actions[s * targets + k];
    Var lp = tape.LogSoftmax(tape.SliceCols(logits, k * n_actions, n_actions));
    Var nll = tape.Scale(tape.Pick(lp, std::move(cols)), -1.0);
    total = k == 0 ? nll : tape.Add(total, nll);
  }
  return total;
}

void CheckActions(std::span<const int> actions, int n_actions) {
  for (int a : actions) {
    if (a < 0 || a >= n_actions) {
      throw UsageError("ed_loss: action index " + std::to_string(a) + " out of range");
    }
  }
}

}  // namespace

std::string TargetModeName(TargetMode m) {
  return m == TargetMode::kOwnAction ? "own-action" : "teammate-actions";
}

TargetMode ParseTargetMode(const std::string& name) {
  if (name == "own-action") return TargetMode::kOwnAction;
  if (name == "teammate-actions") return TargetMode::kTeammateActions;
  throw ConfigError("unknown agent_model.target_mode '" + name + "'");
}

void AgentModelConfig::Validate() const {
  if (obs_dim < 1 || n_actions < 1 || hidden_dim < 1 || embed_dim < 1 ||
      decoder_hidden < 1) {
    throw ConfigError("agent_model dimensions must be >= 1");
  }
  if (target_mode == TargetMode::kTeammateActions && n_agents < 2) {
    throw ConfigError("agent_model.target_mode teammate-actions needs >= 2 agents");
  }
}

ParameterSet InitAgentModelParameters(const AgentModelConfig& c, uint64_t seed) {
  c.Validate();
  ParameterSet params(seed);
  Rng rng(seed);
  InitGru(params, "enc", c.InputDim(), c.hidden_dim, rng);
  InitDense(params, "proj", c.hidden_dim, c.embed_dim, rng);
  const std::array<int, 3> obs = {c.embed_dim, c.decoder_hidden, c.obs_dim};
  const std::array<int, 3> act = {c.embed_dim, c.decoder_hidden,
                                  c.n_actions * c.NumActionTargets()};
  InitMlp(params, "dec_obs", obs, rng);
  InitMlp(params, "dec_act", act, rng);
  return params;
}

void Trajectory::Append(Observation obs, int prev_action) {
  observations.push_back(std::move(obs));
  prev_actions.push_back(prev_action);
}

Trajectory Trajectory::Prefix(int t) const {
  if (t < 1 || t > length()) throw UsageError("trajectory prefix out of range");
  Trajectory p;
  p.observations.assign(observations.begin(), observations.begin() + t);
  p.prev_actions.assign(prev_actions.begin(), prev_actions.begin() + t);
  return p;
}

void FillStepInput(std::span<const double> obs, int prev_action, int n_actions,
                   std::span<double> out) {
  if (out.size() != obs.size() + static_cast<size_t>(n_actions)) {
    throw ConfigError("encoder input width mismatch");
  }
  std::copy(obs.begin(), obs.end(), out.begin());
  std::fill(out.begin() + obs.size(), out.end(), 0.0);
  if (prev_action >= 0) {
    if (prev_action >= n_actions) throw UsageError("previous action out of range");
    out[obs.size() + prev_action] = 1.0;
  }
}

namespace {

Var EncodeOnTape(Tape& tape, const Trajectory& traj, const ParameterSet& params,
                 const AgentModelConfig& c) {
  if (traj.length() < 1) throw UsageError("encode: empty trajectory");
  Var h = tape.Constant(Tensor({1, c.hidden_dim}));
  for (int k = 0; k < traj.length(); ++k) {
    if (static_cast<int>(traj.observations[k].size()) != c.obs_dim) {
      throw ConfigError("encode: observation width " +
                        std::to_string(traj.observations[k].size()) +
                        " does not match obs_dim " + std::to_string(c.obs_dim));
    }
    Tensor x({1, c.InputDim()});
    FillStepInput(traj.observations[k], traj.prev_actions[k], c.n_actions, x.data());
    h = GruStep(tape, h, tape.Constant(std::move(x)), params, "enc");
  }
  return Embed(tape, h, params);
}

}  // namespace

std::vector<double> Encode(const Trajectory& traj, const ParameterSet& params,
                           const AgentModelConfig& config) {
  Tape tape(false);
  return tape.value(EncodeOnTape(tape, traj, params, config)).values();
}

Decoded Decode(std::span<const double> embedding, const ParameterSet& params,
               const AgentModelConfig& config) {
  if (static_cast<int>(embedding.size()) != config.embed_dim) {
    throw ConfigError("decode: embedding width does not match embed_dim");
  }
  Tape tape(false);
  Var e = tape.Constant(
      Tensor({1, config.embed_dim}, std::vector<double>(embedding.begin(), embedding.end())));
  Decoded out;
  out.observation = tape.value(Mlp(tape, e, params, "dec_obs", 2)).values();
  out.action_logits = tape.value(Mlp(tape, e, params, "dec_act", 2)).values();
  return out;
}

EdLossValue EdLoss(const Trajectory& traj, std::span<const double> target_obs,
                   std::span<const int> target_actions, const ParameterSet& params,
                   const AgentModelConfig& c) {
  if (static_cast<int>(target_obs.size()) != c.obs_dim) {
    throw ConfigError("ed_loss: target observation width mismatch");
  }
  if (static_cast<int>(target_actions.size()) != c.NumActionTargets()) {
    throw UsageError("ed_loss: expected " + std::to_string(c.NumActionTargets()) +
                     " action targets");
  }
  CheckActions(target_actions, c.n_actions);
  Tape tape(false);
  Var e = EncodeOnTape(tape, traj, params, c);
  Var target = tape.Constant(
      Tensor({1, c.obs_dim}, std::vector<double>(target_obs.begin(), target_obs.end())));
  Var recon = RowSumOfSquares(tape, tape.Sub(Mlp(tape, e, params, "dec_obs", 2), target));
  Var nll = ActionNll(tape, Mlp(tape, e, params, "dec_act", 2),
                      std::vector<int>(target_actions.begin(), target_actions.end()),
                      c.n_actions, c.NumActionTargets());
  EdLossValue v;
  v.reconstruction = tape.scalar(recon);
  v.action = tape.scalar(nll);
  v.total = v.reconstruction + v.action;
  return v;
}

EdLossVars EdLossSequences(Tape& tape, const SequenceBatch& batch,
                           const ParameterSet& params, const AgentModelConfig& c) {
  const int S = batch.num_sequences;
  if (S < 1 || batch.length < 1) throw UsageError("ed_loss: empty sequence batch");
  if (static_cast<int>(batch.inputs.size()) != batch.length ||
      static_cast<int>(batch.target_obs.size()) != batch.length ||
      static_cast<int>(batch.target_actions.size()) != batch.length ||
      static_cast<int>(batch.mask.size()) != batch.length) {
    throw UsageError("ed_loss: sequence batch fields have inconsistent lengths");
  }
  const int targets = c.NumActionTargets();
  Var h = tape.Constant(Tensor({S, c.hidden_dim}));
  Var total{};
  EdLossVars out;
  for (int t = 0; t < batch.length; ++t) {
    CheckActions(batch.target_actions[t], c.n_actions);
    if (static_cast<int>(batch.target_actions[t].size()) != S * targets) {
      throw UsageError("ed_loss: wrong number of action targets");
    }
    h = GruStep(tape, h, tape.Constant(batch.inputs[t]), params, "enc");
    Var e = Embed(tape, h, params);
    Var mask = tape.Constant(batch.mask[t]);
    Var recon = tape.Mul(RowSumOfSquares(tape, tape.Sub(Mlp(tape, e, params, "dec_obs", 2),
                                                        tape.Constant(batch.target_obs[t]))),
                         mask);
    Var nll = tape.Mul(ActionNll(tape, Mlp(tape, e, params, "dec_act", 2),
                                 batch.target_actions[t], c.n_actions, targets),
                       mask);
    Var step = tape.Sum(tape.Add(recon, nll));
    total = t == 0 ? step : tape.Add(total, step);
    for (size_t s = 0; s < static_cast<size_t>(S); ++s) {
      out.reconstruction += tape.value(recon)[s];
      out.action += tape.value(nll)[s];
      out.steps += batch.mask[t][s];
    }
  }
  if (out.steps <= 0.0) throw UsageError("ed_loss: every step is masked");
  out.total = tape.Scale(total, 1.0 / out.steps);
  out.reconstruction /= out.steps;
  out.action /= out.steps;
  return out;
}

SequenceBatch MakeSequenceBatch(std::span<const LabeledSequence> sequences,
                                const AgentModelConfig& c) {
  SequenceBatch b;
  b.num_sequences = static_cast<int>(sequences.size());
  for (const LabeledSequence& s : sequences) {
    if (static_cast<int>(s.action_targets.size()) != s.trajectory.length()) {
      throw UsageError("labeled sequence: one action target list per step expected");
    }
    b.length = std::max(b.length, s.trajectory.length());
  }
  const int S = b.num_sequences;
  const int targets = c.NumActionTargets();
  for (int t = 0; t < b.length; ++t) {
    Tensor in({S, c.InputDim()}), obs({S, c.obs_dim}), mask({S, 1});
    std::vector<int> acts(static_cast<size_t>(S) * targets, 0);
    for (int k = 0; k < S; ++k) {
      const LabeledSequence& s = sequences[k];
      if (t >= s.trajectory.length()) continue;
      const Observation& o = s.trajectory.observations[t];
      if (static_cast<int>(o.size()) != c.obs_dim) {
        throw ConfigError("labeled sequence: observation width mismatch");
      }
      FillStepInput(o, s.trajectory.prev_actions[t], c.n_actions, in.row(k));
      std::copy(o.begin(), o.end(), obs.row(k).begin());
      if (static_cast<int>(s.action_targets[t].size()) != targets) {
        throw UsageError("labeled sequence: wrong number of action targets");
      }
      std::copy(s.action_targets[t].begin(), s.action_targets[t].end(),
                acts.begin() + static_cast<size_t>(k) * targets);
      mask[k] = 1.0;
    }
    b.inputs.push_back(std::move(in));
    b.target_obs.push_back(std::move(obs));
    b.target_actions.push_back(std::move(acts));
    b.mask.push_back(std::move(mask));
  }
  return b;
}

EdLossValue EdTrainStep(ParameterSet& params, Adam& adam, const SequenceBatch& batch,
                        const AgentModelConfig& c, double learning_rate,
                        double max_grad_norm) {
  Tape tape;
  EdLossVars loss = EdLossSequences(tape, batch, params, c);
  EdLossValue v{tape.scalar(loss.total), loss.reconstruction, loss.action};
  tape.Backward(loss.total);
  Gradients g = tape.GradientsFor(params);
  Gradients* gp = &g;
  ClipGlobalNorm(std::span(&gp, 1), max_grad_norm);
  adam.Step("agent_model", params, g, learning_rate);
  return v;
}

EncoderState::EncoderState(int num_agents, int hidden_dim)
    : hidden_({num_agents, hidden_dim}) {}

Tensor EncoderState::Step(const Tensor& inputs, const ParameterSet& params) {
  Tape tape(false);
  Var h = GruStep(tape, tape.Constant(hidden_), tape.Constant(inputs), params, "enc");
  hidden_ = tape.value(h);
  return tape.value(Embed(tape, h, params));
}

}  // namespace mars
