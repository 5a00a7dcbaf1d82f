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

#include "mars/policy.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "mars/errors.h"
#include "mars/layers.h"

namespace mars {
namespace {

constexpr int kPolicyLayers = 3;

struct VariantInfo {
  Variant variant;
  const char* name;
};

constexpr std::array<VariantInfo, 5> kVariantNames = {{
    {Variant::kMars, "MARS"},
    {Variant::kMarsNoSkeleton, "MARS_NO_SKELETON"},
    {Variant::kPoamLike, "POAM_LIKE"},
    {Variant::kIppoMaht, "IPPO_MAHT"},
    {Variant::kNaiveMarl, "NAIVE_MARL"},
}};

Tensor Stack(std::span<const StepRecord* const> steps, Tensor StepRecord::*field) {
  int rows = 0;
  int cols = -1;
  for (const StepRecord* s : steps) {
    const Tensor& t = s->*field;
    rows += t.rows();
    if (cols < 0) cols = t.cols();
    if (t.cols() != cols) throw UsageError("step records disagree on feature width");
  }
  Tensor out({rows, std::max(cols, 0)});
  size_t at = 0;
  for (const StepRecord* s : steps) {
    const auto& v = (s->*field).values();
    std::copy(v.begin(), v.end(), out.values().begin() + at);
    at += v.size();
  }
  return out;
}

Var RowSum(Tape& tape, Var a) {
  return tape.MatMul(a, tape.Constant(Tensor({tape.value(a).cols(), 1}, 1.0)));
}

}  // namespace

std::string VariantName(Variant v) {
  for (const auto& info : kVariantNames) {
    if (info.variant == v) return info.name;
  }
  throw ConfigError("unknown variant");
}

Variant ParseVariant(const std::string& name) {
  for (const auto& info : kVariantNames) {
    if (name == info.name) return info.variant;
  }
  throw ConfigError("unknown variant '" + name + "'");
}

VariantFlags FlagsFor(Variant v) {
  switch (v) {
    case Variant::kMars:
      return {true, true, true, true};
    case Variant::kMarsNoSkeleton:
      return {true, true, false, true};
    case Variant::kPoamLike:
      return {true, false, false, true};
    case Variant::kIppoMaht:
      return {false, false, false, true};
    case Variant::kNaiveMarl:
      return {false, false, false, false};
  }
  throw ConfigError("unknown variant");
}

void PolicyConfig::Validate() const {
  if (hidden_dim < 1) throw ConfigError("policy.hidden_dim must be >= 1");
  if (clip_epsilon <= 0.0) throw ConfigError("policy.clip_epsilon must be > 0");
  if (epochs < 1) throw ConfigError("policy.epochs must be >= 1");
  if (minibatches < 1) throw ConfigError("policy.minibatches must be >= 1");
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("policy.gamma must be in [0, 1]");
  if (gae_lambda < 0.0 || gae_lambda > 1.0) {
    throw ConfigError("policy.gae_lambda must be in [0, 1]");
  }
  if (entropy_coef < 0.0) throw ConfigError("policy.entropy_coef must be >= 0");
  if (max_grad_norm <= 0.0) throw ConfigError("policy.max_grad_norm must be > 0");
  if (lr_actor < 0.0 || lr_critic < 0.0 || lr_rfm < 0.0 || lr_agent_model < 0.0) {
    throw ConfigError("learning rates must be >= 0");
  }
}

int ModelSpec::FeatureDim() const {
  const VariantFlags f = flags();
  if (f.rfm) return rfm.OutputDim();
  if (f.encoder_decoder) return agent_model.embed_dim;
  return 0;
}

void ModelSpec::Validate() const {
  if (obs_dim < 1 || n_actions < 1) throw ConfigError("model dimensions must be >= 1");
  policy.Validate();
  const VariantFlags f = flags();
  if (f.encoder_decoder) {
    agent_model.Validate();
    if (agent_model.obs_dim != obs_dim) {
      throw ConfigError("agent_model.obs_dim does not match the environment");
    }
  }
  if (f.rfm) {
    rfm.Validate();
    if (rfm.node_dim != agent_model.embed_dim) {
      throw ConfigError("rfm.node_dim must equal agent_model.embed_dim");
    }
    if (rfm.position_dim != 2) throw ConfigError("rfm.position_dim must be 2");
  }
}

ModelParameters InitModelParameters(const ModelSpec& spec, uint64_t seed) {
  spec.Validate();
  ModelParameters p;
  const VariantFlags f = spec.flags();
  if (f.encoder_decoder) {
    p.agent_model = InitAgentModelParameters(spec.agent_model, DeriveSeed(seed, {1}));
  }
  if (f.rfm) p.rfm = InitRfmParameters(spec.rfm, DeriveSeed(seed, {2}));
  const int h = spec.policy.hidden_dim;
  const std::array<int, 4> actor = {spec.InputDim(), h, h, spec.n_actions};
  const std::array<int, 4> critic = {spec.InputDim(), h, h, 1};
  p.actor = ParameterSet(DeriveSeed(seed, {3}));
  p.critic = ParameterSet(DeriveSeed(seed, {4}));
  Rng ra(p.actor.seed()), rc(p.critic.seed());
  InitMlp(p.actor, "actor", actor, ra);
  InitMlp(p.critic, "critic", critic, rc);
  // Small initial policy logits keep the first rollouts near uniform.
  for (double& w : p.actor.GetMutable("actor.2.w").values()) w *= 0.01;
  return p;
}

Var AgentFeatures(Tape& tape, const ModelSpec& spec, const ModelParameters& params,
                  std::span<const StepRecord* const> steps) {
  const VariantFlags f = spec.flags();
  if (f.rfm) {
    std::vector<const SkeletonGraph*> graphs;
    std::vector<int> has;
    for (const StepRecord* s : steps) {
      if (!s->graph || s->graph->n != s->n) {
        throw UsageError("step record graph does not match its agent count");
      }
      graphs.push_back(s->graph.get());
      has.insert(has.end(), s->has_embedding.begin(), s->has_embedding.end());
    }
    const GraphBatch batch = GraphBatch::FromGraphs(graphs);
    Var nodes = InitialNodes(tape, Stack(steps, &StepRecord::embeddings),
                             Stack(steps, &StepRecord::positions), has, params.rfm);
    GraphVars out = MessagePass(tape, ZeroGraphFeatures(tape, nodes, batch, spec.rfm), batch,
                                spec.rfm, params.rfm);
    return RelationalEmbeddings(tape, out, batch);
  }
  if (f.encoder_decoder) return tape.Constant(Stack(steps, &StepRecord::embeddings));
  return Var{};
}

Var PolicyInputs(Tape& tape, const ModelSpec& spec, const ModelParameters& params,
                 std::span<const StepRecord* const> steps) {
  Var base = tape.Constant(Stack(steps, &StepRecord::base));
  if (tape.value(base).cols() != spec.BaseDim()) {
    throw UsageError("step record base width does not match the model");
  }
  Var features = AgentFeatures(tape, spec, params, steps);
  if (features.id < 0) return base;
  const std::array<Var, 2> parts = {base, features};
  return tape.ConcatCols(parts);
}

double ActionDistribution::LogProb(int action) const {
  if (action < 0 || action >= static_cast<int>(log_probs.size())) {
    throw UsageError("action out of range");
  }
  return log_probs[action];
}

double ActionDistribution::Entropy() const {
  double h = 0.0;
  for (double lp : log_probs) h -= std::exp(lp) * lp;
  return h;
}

int ActionDistribution::Sample(Rng& rng) const {
  std::vector<double> p(log_probs.size());
  for (size_t k = 0; k < p.size(); ++k) p[k] = std::exp(log_probs[k]);
  return rng.Categorical(p);
}

int ActionDistribution::Greedy() const {
  return static_cast<int>(std::max_element(log_probs.begin(), log_probs.end()) -
                          log_probs.begin());
}

StepOutputs EvaluateStep(const ModelSpec& spec, const ModelParameters& params,
                         const StepRecord& step) {
  Tape tape(false);
  const StepRecord* s = &step;
  Var x = PolicyInputs(tape, spec, params, std::span(&s, 1));
  std::vector<int> rows;
  for (int i = 0; i < step.n; ++i) {
    if (step.controlled[i]) rows.push_back(i);
  }
  StepOutputs out;
  out.distributions.resize(step.n);
  out.values = tape.value(Mlp(tape, x, params.critic, "critic", kPolicyLayers)).values();
  if (!rows.empty()) {
    const Tensor lp = tape.value(tape.LogSoftmax(
        Mlp(tape, tape.GatherRows(x, rows), params.actor, "actor", kPolicyLayers)));
    for (size_t k = 0; k < rows.size(); ++k) {
      const auto r = lp.row(static_cast<int>(k));
      out.distributions[rows[k]].log_probs.assign(r.begin(), r.end());
    }
  }
  return out;
}

GaeResult Gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const int> dones, double gamma, double lambda) {
  const size_t L = rewards.size();
  if (values.size() != L + 1) {
    throw UsageError("gae: expected " + std::to_string(L + 1) + " values, got " +
                     std::to_string(values.size()));
  }
  if (dones.size() != L) throw UsageError("gae: dones length differs from rewards");
  GaeResult out;
  out.advantages.assign(L, 0.0);
  out.returns.assign(L, 0.0);
  double running = 0.0;
  for (size_t k = L; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * values[k + 1] * live - values[k];
    running = delta + gamma * lambda * live * running;
    out.advantages[k] = running;
    out.returns[k] = running + values[k];
  }
  return out;
}

LossVars BuildLosses(Tape& tape, const ModelSpec& spec, const ModelParameters& params,
                     std::span<const StepRecord* const> steps) {
  if (steps.empty()) throw UsageError("loss: empty minibatch");
  Var x = PolicyInputs(tape, spec, params, steps);
  std::vector<int> ctrl_rows, ctrl_actions;
  std::vector<double> old_lp, adv, ret, all_returns;
  int offset = 0;
  for (const StepRecord* s : steps) {
    for (int i = 0; i < s->n; ++i) {
      all_returns.push_back(s->returns.at(i));
      if (!s->controlled[i]) continue;
      ctrl_rows.push_back(offset + i);
      ctrl_actions.push_back(s->actions.at(i));
      old_lp.push_back(s->old_log_probs.at(i));
      adv.push_back(s->advantages.at(i));
    }
    offset += s->n;
  }
  LossVars out;
  out.all_rows = offset;
  out.controlled_rows = static_cast<int>(ctrl_rows.size());

  Var v = Mlp(tape, x, params.critic, "critic", kPolicyLayers);
  Var diff = tape.Sub(v, tape.Constant(Tensor({offset, 1}, all_returns)));
  out.critic = tape.Scale(tape.Mean(tape.Square(diff)), 0.5);
  out.critic_value = tape.scalar(out.critic);

  if (ctrl_rows.empty()) throw UsageError("loss: minibatch has no controlled agents");
  const int m = out.controlled_rows;
  Var lp_all = tape.LogSoftmax(
      Mlp(tape, tape.GatherRows(x, ctrl_rows), params.actor, "actor", kPolicyLayers));
  Var lp = tape.Pick(lp_all, ctrl_actions);
  Var ratio = tape.Exp(tape.Sub(lp, tape.Constant(Tensor({m, 1}, old_lp))));
  Var a = tape.Constant(Tensor({m, 1}, adv));
  const double eps = spec.policy.clip_epsilon;
  Var surrogate = tape.Minimum(tape.Mul(ratio, a),
                               tape.Mul(tape.Clamp(ratio, 1.0 - eps, 1.0 + eps), a));
  Var entropy = tape.Scale(RowSum(tape, tape.Mul(tape.Exp(lp_all), lp_all)), -1.0);
  Var mean_entropy = tape.Mean(entropy);
  out.actor = tape.Sub(tape.Scale(tape.Mean(surrogate), -1.0),
                       tape.Scale(mean_entropy, spec.policy.entropy_coef));
  out.actor_value = tape.scalar(out.actor);
  out.entropy = tape.scalar(mean_entropy);
  const Tensor& r = tape.value(ratio);
  int clipped = 0;
  double kl = 0.0;
  for (int k = 0; k < m; ++k) {
    clipped += std::abs(r[k] - 1.0) > eps;
    kl += (r[k] - 1.0) - std::log(r[k]);
  }
  out.clip_fraction = static_cast<double>(clipped) / m;
  out.approx_kl = kl / m;
  return out;
}

UpdateStats PpoUpdate(const ModelSpec& spec, ModelParameters& params, Adam& adam,
                      std::span<const StepRecord> steps_in, Rng& rng) {
  const PolicyConfig& c = spec.policy;
  if (steps_in.empty()) throw UsageError("ppo update: no steps");
  std::vector<StepRecord> steps(steps_in.begin(), steps_in.end());
  if (c.normalize_advantages) {
    double sum = 0.0, sq = 0.0;
    int count = 0;
    for (const StepRecord& s : steps) {
      for (int i = 0; i < s.n; ++i) {
        if (!s.controlled[i]) continue;
        sum += s.advantages[i];
        sq += s.advantages[i] * s.advantages[i];
        ++count;
      }
    }
    if (count > 0) {
      const double mean = sum / count;
      const double sd = std::sqrt(std::max(0.0, sq / count - mean * mean));
      for (StepRecord& s : steps) {
        for (int i = 0; i < s.n; ++i) {
          if (s.controlled[i]) s.advantages[i] = (s.advantages[i] - mean) / (sd + 1e-8);
        }
      }
    }
  }
  const bool with_rfm = spec.flags().rfm;
  const int total = static_cast<int>(steps.size());
  const int mbs = std::min(c.minibatches, total);
  std::vector<int> order(total);
  UpdateStats stats;
  for (int epoch = 0; epoch < c.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    rng.Shuffle(order);
    for (int b = 0; b < mbs; ++b) {
      const int begin = static_cast<int>(static_cast<int64_t>(total) * b / mbs);
      const int end = static_cast<int>(static_cast<int64_t>(total) * (b + 1) / mbs);
      std::vector<const StepRecord*> mb;
      for (int k = begin; k < end; ++k) mb.push_back(&steps[order[k]]);
      bool any_controlled = false;
      for (const StepRecord* s : mb) {
        for (int f : s->controlled) any_controlled |= f != 0;
      }
      if (!any_controlled) continue;
      Tape tape;
      LossVars loss = BuildLosses(tape, spec, params, mb);
      tape.Backward(tape.Add(loss.actor, loss.critic));
      Gradients g_actor = tape.GradientsFor(params.actor);
      Gradients g_critic = tape.GradientsFor(params.critic);
      Gradients g_rfm;
      std::vector<Gradients*> all = {&g_actor, &g_critic};
      if (with_rfm) {
        g_rfm = tape.GradientsFor(params.rfm);
        all.push_back(&g_rfm);
      }
      const double norm = ClipGlobalNorm(all, c.max_grad_norm);
      adam.Step("actor", params.actor, g_actor, c.lr_actor);
      adam.Step("critic", params.critic, g_critic, c.lr_critic);
      if (with_rfm) adam.Step("rfm", params.rfm, g_rfm, c.lr_rfm);
      stats.actor_loss += loss.actor_value;
      stats.critic_loss += loss.critic_value;
      stats.entropy += loss.entropy;
      stats.grad_norm += norm;
      stats.clip_fraction += loss.clip_fraction;
      stats.approx_kl += loss.approx_kl;
      ++stats.updates;
    }
  }
  if (stats.updates > 0) {
    const double n = stats.updates;
    stats.actor_loss /= n;
    stats.critic_loss /= n;
    stats.entropy /= n;
    stats.grad_norm /= n;
    stats.clip_fraction /= n;
    stats.approx_kl /= n;
  }
  return stats;
}

}  // namespace mars
