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

#ifndef MARS_POLICY_H_
#define MARS_POLICY_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mars/agent_model.h"
#include "mars/optim.h"
#include "mars/parameters.h"
#include "mars/rfm.h"
#include "mars/rng.h"
#include "mars/skeleton.h"
#include "mars/tape.h"
#include "mars/tensor.h"

namespace mars {

enum class Variant { kMars, kMarsNoSkeleton, kPoamLike, kIppoMaht, kNaiveMarl };

std::string VariantName(Variant v);
Variant ParseVariant(const std::string& name);

struct VariantFlags {
  bool encoder_decoder = false;
  bool rfm = false;
  bool skeleton = false;  // sparse skeleton graph; full graph otherwise
  bool learns = true;
};

VariantFlags FlagsFor(Variant v);

struct PolicyConfig {
  int hidden_dim = 32;
  double clip_epsilon = 0.2;
  int epochs = 4;
  int minibatches = 4;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  double lr_actor = 3e-4;
  double lr_critic = 1e-3;
  double lr_rfm = 3e-4;
  double lr_agent_model = 1e-3;
  bool normalize_advantages = true;

  void Validate() const;
};

// Every learned piece of a controlled-team learner.
struct ModelParameters {
  ParameterSet agent_model;
  ParameterSet rfm;
  ParameterSet actor;
  ParameterSet critic;
};

struct ModelSpec {
  Variant variant = Variant::kMars;
  int obs_dim = 9;
  int n_actions = 5;
  AgentModelConfig agent_model;
  RfmConfig rfm;
  PolicyConfig policy;

  VariantFlags flags() const { return FlagsFor(variant); }
  // Width of the per-agent feature appended to [obs, one_hot(prev action)].
  int FeatureDim() const;
  int BaseDim() const { return obs_dim + n_actions; }
  int InputDim() const { return BaseDim() + FeatureDim(); }
  void Validate() const;
};

// Actor ids "actor.{0,1,2}.{w,b}", critic ids "critic.{0,1,2}.{w,b}".
ModelParameters InitModelParameters(const ModelSpec& spec, uint64_t seed);

// One joint time step of one episode, holding everything needed to rebuild
// the policy inputs with gradients during the update.
struct StepRecord {
  int n = 0;
  std::vector<int> controlled;      // 1 if agent i is controlled
  Tensor base;                      // [n x (obs_dim + n_actions)]
  Tensor embeddings;                // [n x embed_dim]; stop-gradient
  std::vector<int> has_embedding;   // rows of `embeddings` that are valid
  Tensor positions;                 // [n x 2]
  std::shared_ptr<const SkeletonGraph> graph;
  std::vector<int> actions;
  std::vector<double> old_log_probs;  // meaningful for controlled agents
  std::vector<double> old_values;
  std::vector<double> advantages;
  std::vector<double> returns;
  double reward = 0.0;
  bool done = false;
};

// Per-agent features for a set of steps (rows concatenated in step order),
// or an invalid Var when the variant has none.
Var AgentFeatures(Tape& tape, const ModelSpec& spec, const ModelParameters& params,
                  std::span<const StepRecord* const> steps);
// [obs, one_hot(prev action), features] for every agent of every step.
Var PolicyInputs(Tape& tape, const ModelSpec& spec, const ModelParameters& params,
                 std::span<const StepRecord* const> steps);

struct ActionDistribution {
  std::vector<double> log_probs;

  double LogProb(int action) const;
  double Entropy() const;
  int Sample(Rng& rng) const;
  int Greedy() const;
};

struct StepOutputs {
  std::vector<ActionDistribution> distributions;  // one per agent, controlled only filled
  std::vector<double> values;                     // one per agent
};

// Forward pass without gradients for acting.
StepOutputs EvaluateStep(const ModelSpec& spec, const ModelParameters& params,
                         const StepRecord& step);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// `values` has one more entry than `rewards` (bootstrap). A done step does
// not bootstrap from the next value.
GaeResult Gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const int> dones, double gamma, double lambda);

struct LossVars {
  Var actor;   // clipped surrogate over controlled rows, minus entropy bonus
  Var critic;  // 0.5 * mean squared error over all rows
  double actor_value = 0.0;
  double critic_value = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  int controlled_rows = 0;
  int all_rows = 0;
};

LossVars BuildLosses(Tape& tape, const ModelSpec& spec, const ModelParameters& params,
                     std::span<const StepRecord* const> steps);

struct UpdateStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;  // before clipping
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  int updates = 0;
};

// PPO: `epochs` passes over the steps split into `minibatches` shuffled
// minibatches; gradients reach the RFM, actor and critic.
UpdateStats PpoUpdate(const ModelSpec& spec, ModelParameters& params, Adam& adam,
                      std::span<const StepRecord> steps, Rng& rng);

}  // namespace mars

#endif  // MARS_POLICY_H_
