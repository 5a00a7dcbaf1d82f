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

#include "mars/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <thread>

#include "mars/errors.h"

namespace mars {
namespace {

using nlohmann::json;

constexpr uint64_t kTrainStream = 0x7a;
constexpr uint64_t kEvalStream = 0xe7;

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

Tensor BaseRow(const std::vector<Observation>& obs, const std::vector<int>& prev,
               int n_actions) {
  const int n = static_cast<int>(obs.size());
  const int width = static_cast<int>(obs[0].size()) + n_actions;
  Tensor base({n, width});
  for (int i = 0; i < n; ++i) FillStepInput(obs[i], prev[i], n_actions, base.row(i));
  return base;
}

// Absolute positions of every agent, read off one agent's observation.
Tensor PositionsFrom(const Observation& o, int self, int n) {
  Tensor pos({n, 2});
  for (int j = 0; j < n; ++j) {
    if (j == self) {
      pos.at(j, 0) = o[0];
      pos.at(j, 1) = o[1];
    } else {
      const int slot = 4 + 2 * (j < self ? j : j - 1);
      pos.at(j, 0) = o[0] + o[slot];
      pos.at(j, 1) = o[1] + o[slot + 1];
    }
  }
  return pos;
}

json StatsToJson(const IterationStats& s) {
  return {{"env_steps", s.env_steps},
          {"episodes", s.episodes},
          {"train_return_mean", s.train_return_mean},
          {"actor_loss", s.ppo.actor_loss},
          {"critic_loss", s.ppo.critic_loss},
          {"entropy", s.ppo.entropy},
          {"grad_norm", s.ppo.grad_norm},
          {"clip_fraction", s.ppo.clip_fraction},
          {"approx_kl", s.ppo.approx_kl},
          {"updates", s.ppo.updates},
          {"ed_total", s.ed.total},
          {"ed_reconstruction", s.ed.reconstruction},
          {"ed_action", s.ed.action},
          {"edges_min", s.edges_min},
          {"edges_max", s.edges_max},
          {"edges_mean", s.edges_mean}};
}

IterationStats StatsFromJson(const json& j) {
  IterationStats s;
  s.env_steps = j.at("env_steps").get<int64_t>();
  s.episodes = j.at("episodes").get<int>();
  s.train_return_mean = j.at("train_return_mean").get<double>();
  s.ppo.actor_loss = j.at("actor_loss").get<double>();
  s.ppo.critic_loss = j.at("critic_loss").get<double>();
  s.ppo.entropy = j.at("entropy").get<double>();
  s.ppo.grad_norm = j.at("grad_norm").get<double>();
  s.ppo.clip_fraction = j.at("clip_fraction").get<double>();
  s.ppo.approx_kl = j.at("approx_kl").get<double>();
  s.ppo.updates = j.at("updates").get<int>();
  s.ed.total = j.at("ed_total").get<double>();
  s.ed.reconstruction = j.at("ed_reconstruction").get<double>();
  s.ed.action = j.at("ed_action").get<double>();
  s.edges_min = j.at("edges_min").get<int>();
  s.edges_max = j.at("edges_max").get<int>();
  s.edges_mean = j.at("edges_mean").get<double>();
  return s;
}

json PoolChecksums(const std::vector<TeamPolicy>& policies) {
  json out = json::array();
  for (const TeamPolicy& p : policies) out.push_back(ChecksumHex(p.Checksum()));
  return out;
}

bool NeedsPool(const ExperimentConfig& c) {
  return c.teams.m_groups > 0 || c.variant == Variant::kNaiveMarl;
}

EvalSummary Summarize(const std::vector<Episode>& episodes) {
  EvalSummary s;
  s.episodes = static_cast<int>(episodes.size());
  if (episodes.empty()) return s;
  for (const Episode& e : episodes) {
    s.mean_return += e.team_return;
    s.capture_rate += e.captured ? 1.0 : 0.0;
    s.mean_length += e.length();
  }
  s.mean_return /= s.episodes;
  s.capture_rate /= s.episodes;
  s.mean_length /= s.episodes;
  double var = 0.0;
  for (const Episode& e : episodes) var += std::pow(e.team_return - s.mean_return, 2);
  s.std_return = std::sqrt(var / s.episodes);
  return s;
}

// Runs `count` episode jobs over `workers` threads; job k fills slot k.
template <typename Job>
std::vector<Episode> RunParallel(int count, int workers, const Job& job) {
  std::vector<Episode> out(count);
  if (workers <= 1 || count <= 1) {
    for (int k = 0; k < count; ++k) out[k] = job(k);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (int k = w; k < count; k += workers) out[k] = job(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

Episode CollectRollout(const ExperimentConfig& config, const ModelSpec& spec,
                       const ModelParameters& params, std::span<const TeamPolicy> pool,
                       const TeamComposition& comp, uint64_t episode_seed,
                       const RolloutOptions& options) {
  const int n = config.env.n_agents;
  if (comp.n_total != n) throw UsageError("composition size does not match env.n_agents");
  if (const std::string bad = comp.Validate(); !bad.empty()) {
    throw UsageError("invalid composition: " + bad);
  }
  for (const Group& g : comp.groups) {
    if (g.policy_index < 0 || g.policy_index >= static_cast<int>(pool.size())) {
      throw UsageError("composition refers to a policy outside the pool");
    }
  }
  const VariantFlags flags = spec.flags();
  const bool naive = options.controlled_team != nullptr;
  Rng act_rng(DeriveSeed(episode_seed, {11}));
  Rng skeleton_rng(DeriveSeed(episode_seed, {12}));

  Episode ep;
  ep.composition = comp;
  std::vector<int> controlled(n, 0);
  for (int a : comp.controlled) controlled[a] = 1;
  if (flags.rfm && !naive) {
    const std::vector<int> group_of = comp.GroupOf();
    ep.graph = std::make_shared<const SkeletonGraph>(
        flags.skeleton ? BuildSkeleton(group_of, config.representatives, skeleton_rng)
                       : BuildFullGraph(n));
  }
  // Agents whose own streams feed the encoder.
  std::vector<int> tracked;
  if (flags.encoder_decoder && !naive) {
    for (int i = 0; i < n; ++i) {
      if (controlled[i] || !flags.rfm) tracked.push_back(i);
    }
  }
  EncoderState encoder(static_cast<int>(tracked.size()), spec.agent_model.hidden_dim);
  const int embed_dim = flags.encoder_decoder ? spec.agent_model.embed_dim : 0;

  PredatorPrey env(config.env);
  std::vector<Observation> obs = env.Reset(DeriveSeed(episode_seed, {13}));
  std::vector<int> prev(n, -1);
  for (int a : comp.controlled) {
    (void)a;
    ep.ed_sequences.emplace_back();
  }

  bool done = false;
  while (!done) {
    StepRecord rec;
    rec.n = n;
    rec.controlled = controlled;
    rec.base = BaseRow(obs, prev, spec.n_actions);
    rec.embeddings = Tensor({n, embed_dim});
    rec.has_embedding.assign(n, 0);
    rec.positions = Tensor({n, flags.rfm ? 2 : 0});
    rec.graph = ep.graph;
    if (!tracked.empty()) {
      Tensor inputs({static_cast<int>(tracked.size()), spec.agent_model.InputDim()});
      for (size_t k = 0; k < tracked.size(); ++k) {
        FillStepInput(obs[tracked[k]], prev[tracked[k]], spec.n_actions,
                      inputs.row(static_cast<int>(k)));
      }
      const Tensor e = encoder.Step(inputs, params.agent_model);
      for (size_t k = 0; k < tracked.size(); ++k) {
        const auto src = e.row(static_cast<int>(k));
        std::copy(src.begin(), src.end(), rec.embeddings.row(tracked[k]).begin());
        rec.has_embedding[tracked[k]] = 1;
      }
    }
    if (flags.rfm) rec.positions = PositionsFrom(obs[comp.controlled[0]], comp.controlled[0], n);

    std::vector<int> joint(n, kStay);
    rec.old_log_probs.assign(n, 0.0);
    rec.old_values.assign(n, 0.0);
    if (naive) {
      std::vector<Observation> member_obs;
      for (int a : comp.controlled) member_obs.push_back(obs[a]);
      const std::vector<int> acts = ActUncontrolled(*options.controlled_team, comp.controlled,
                                                    member_obs, n);
      for (size_t k = 0; k < acts.size(); ++k) joint[comp.controlled[k]] = acts[k];
    } else {
      const StepOutputs out = EvaluateStep(spec, params, rec);
      rec.old_values = out.values;
      for (int a : comp.controlled) {
        const ActionDistribution& d = out.distributions[a];
        joint[a] = options.greedy ? d.Greedy() : d.Sample(act_rng);
        rec.old_log_probs[a] = d.LogProb(joint[a]);
      }
    }
    for (const Group& g : comp.groups) {
      std::vector<Observation> member_obs;
      for (int a : g.members) member_obs.push_back(obs[a]);
      const std::vector<int> acts =
          ActUncontrolled(pool[g.policy_index], g.members, member_obs, n, options.team_mode,
                          options.temperature, &act_rng);
      for (size_t k = 0; k < acts.size(); ++k) joint[g.members[k]] = acts[k];
    }
    for (size_t k = 0; k < comp.controlled.size(); ++k) {
      const int a = comp.controlled[k];
      LabeledSequence& seq = ep.ed_sequences[k];
      seq.trajectory.Append(obs[a], prev[a]);
      if (spec.agent_model.target_mode == TargetMode::kOwnAction) {
        seq.action_targets.push_back({joint[a]});
      } else {
        std::vector<int> others;
        for (int j = 0; j < n; ++j) {
          if (j != a) others.push_back(joint[j]);
        }
        seq.action_targets.push_back(std::move(others));
      }
    }
    StepResult r = env.Step(joint);
    rec.actions = joint;
    rec.reward = r.reward;
    rec.done = r.done;
    ep.team_return += r.reward;
    ep.captured = ep.captured || r.info["captured"] > 0.0;
    done = r.done;
    prev = joint;
    obs = std::move(r.observations);
    ep.steps.push_back(std::move(rec));
  }

  const int L = ep.length();
  std::vector<double> rewards(L), values(L + 1, 0.0);
  std::vector<int> dones(L);
  for (int t = 0; t < L; ++t) {
    rewards[t] = ep.steps[t].reward;
    dones[t] = ep.steps[t].done ? 1 : 0;
    ep.steps[t].advantages.assign(n, 0.0);
    ep.steps[t].returns.assign(n, 0.0);
  }
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < L; ++t) values[t] = ep.steps[t].old_values[i];
    const GaeResult g =
        Gae(rewards, values, dones, spec.policy.gamma, spec.policy.gae_lambda);
    for (int t = 0; t < L; ++t) {
      ep.steps[t].advantages[i] = g.advantages[t];
      ep.steps[t].returns[i] = g.returns[t];
    }
  }
  return ep;
}

Episode CollectEpisode(const ExperimentConfig& config, const ModelSpec& spec,
                       const ModelParameters& params, std::span<const TeamPolicy> pool,
                       int m_groups, uint64_t episode_seed, const RolloutOptions& options) {
  Rng comp_rng(DeriveSeed(episode_seed, {10}));
  const TeamComposition comp = SampleComposition(static_cast<int>(pool.size()),
                                                 config.env.n_agents, m_groups, comp_rng);
  return CollectRollout(config, spec, params, pool, comp, episode_seed, options);
}

std::vector<std::string> MetricsColumns(Variant v) {
  std::vector<std::string> cols = {"env_steps", "iteration", "test_return_mean",
                                   "test_return_std", "test_capture_rate"};
  const VariantFlags f = FlagsFor(v);
  if (f.learns) {
    for (const char* c : {"train_return_mean", "actor_loss", "critic_loss", "entropy",
                          "grad_norm"}) {
      cols.push_back(c);
    }
  }
  if (f.encoder_decoder) {
    for (const char* c : {"ed_loss", "ed_reconstruction", "ed_action"}) cols.push_back(c);
  }
  if (f.rfm) {
    for (const char* c : {"edges_mean", "edges_min", "edges_max"}) cols.push_back(c);
  }
  return cols;
}

std::string FormatMetricsRow(Variant v, const MetricsRow& r) {
  const VariantFlags f = FlagsFor(v);
  std::string line = std::to_string(r.env_steps) + "," + std::to_string(r.iteration) + "," +
                     Num(r.test.mean_return) + "," + Num(r.test.std_return) + "," +
                     Num(r.test.capture_rate);
  if (f.learns) {
    for (double x : {r.train_return_mean, r.actor_loss, r.critic_loss, r.entropy, r.grad_norm}) {
      line += "," + Num(x);
    }
  }
  if (f.encoder_decoder) {
    for (double x : {r.ed_loss, r.ed_reconstruction, r.ed_action}) line += "," + Num(x);
  }
  if (f.rfm) {
    line += "," + Num(r.edges_mean) + "," + std::to_string(r.edges_min) + "," +
            std::to_string(r.edges_max);
  }
  return line;
}

TeamPool LoadPoolFor(const ExperimentConfig& config) {
  const std::filesystem::path dir = config.teams.pool_dir;
  if (!std::filesystem::exists(dir / "manifest.json")) {
    if (!NeedsPool(config)) return {};
    throw ConfigError("team pool not found at '" + dir.string() +
                      "' (teams.pool_dir); run pretrain-pool first");
  }
  TeamPool pool = LoadPool(dir);
  const size_t fams = config.teams.pool.families.size();
  if (pool.train.size() != fams * config.teams.pool.train_seeds.size() ||
      pool.eval.size() != fams * config.teams.pool.eval_seeds.size()) {
    throw ConfigError("team pool at '" + dir.string() +
                      "' does not match teams.families / seeds in the config");
  }
  return pool;
}

int BestPoolPolicy(std::span<const TeamPolicy> pool) {
  if (pool.empty()) throw ConfigError("empty team pool");
  int best = 0;
  for (int k = 1; k < static_cast<int>(pool.size()); ++k) {
    if (pool[k].self_play_return > pool[best].self_play_return) best = k;
  }
  return best;
}

Trainer::Trainer(ExperimentConfig config, TeamPool pool)
    : config_(std::move(config)), pool_(std::move(pool)) {
  config_.Validate();
  spec_ = config_.MakeModelSpec();
  if (NeedsPool(config_)) {
    if (static_cast<int>(pool_.train.size()) < std::max(1, config_.teams.m_groups)) {
      throw ConfigError("team pool has too few train policies for teams.m_groups");
    }
  }
  if (spec_.flags().learns) {
    params_ = InitModelParameters(spec_, DeriveSeed(config_.seed, {0x11}));
  }
  update_rng_ = Rng(DeriveSeed(config_.seed, {0x22}));
  next_eval_ = config_.train.eval_interval;
}

std::span<const TeamPolicy> Trainer::TrainPolicies() const { return pool_.train; }

std::span<const TeamPolicy> Trainer::EvalPolicies() const {
  return config_.eval.use_eval_pool ? std::span<const TeamPolicy>(pool_.eval)
                                    : std::span<const TeamPolicy>(pool_.train);
}

IterationStats Trainer::RunIteration() {
  if (!spec_.flags().learns) throw UsageError("variant " + VariantName(config_.variant) +
                                              " does not train");
  const int E = config_.train.episodes_per_iter;
  RolloutOptions opts;
  opts.team_mode = config_.teams.act_mode;
  opts.temperature = config_.teams.temperature;
  const std::span<const TeamPolicy> pool = TrainPolicies();
  const uint64_t iter = static_cast<uint64_t>(iteration_);
  std::vector<Episode> episodes = RunParallel(E, config_.train.workers, [&](int k) {
    return CollectEpisode(config_, spec_, params_, pool, config_.teams.m_groups,
                          DeriveSeed(config_.seed, {kTrainStream, iter, static_cast<uint64_t>(k)}),
                          opts);
  });

  IterationStats s;
  s.episodes = E;
  std::vector<StepRecord> steps;
  std::vector<LabeledSequence> sequences;
  s.edges_min = std::numeric_limits<int>::max();
  s.edges_max = 0;
  for (Episode& e : episodes) {
    s.env_steps += e.length();
    s.train_return_mean += e.team_return / E;
    if (e.graph) {
      const int edges = static_cast<int>(e.graph->edges.size());
      s.edges_min = std::min(s.edges_min, edges);
      s.edges_max = std::max(s.edges_max, edges);
      s.edges_mean += static_cast<double>(edges) / E;
    }
    std::move(e.steps.begin(), e.steps.end(), std::back_inserter(steps));
    std::move(e.ed_sequences.begin(), e.ed_sequences.end(), std::back_inserter(sequences));
  }
  if (!spec_.flags().rfm) s.edges_min = 0;

  s.ppo = PpoUpdate(spec_, params_, adam_, steps, update_rng_);
  if (spec_.flags().encoder_decoder && config_.train.ed_epochs > 0) {
    const SequenceBatch batch = MakeSequenceBatch(sequences, spec_.agent_model);
    for (int k = 0; k < config_.train.ed_epochs; ++k) {
      const EdLossValue v =
          EdTrainStep(params_.agent_model, adam_, batch, spec_.agent_model,
                      config_.policy.lr_agent_model, config_.policy.max_grad_norm);
      if (k == 0) s.ed = v;
    }
  }
  env_steps_ += s.env_steps;
  ++iteration_;

  if (accum_iterations_ == 0) {
    accum_ = s;
  } else {
    accum_.env_steps += s.env_steps;
    accum_.episodes += s.episodes;
    accum_.train_return_mean += s.train_return_mean;
    accum_.ppo.actor_loss += s.ppo.actor_loss;
    accum_.ppo.critic_loss += s.ppo.critic_loss;
    accum_.ppo.entropy += s.ppo.entropy;
    accum_.ppo.grad_norm += s.ppo.grad_norm;
    accum_.ppo.clip_fraction += s.ppo.clip_fraction;
    accum_.ppo.approx_kl += s.ppo.approx_kl;
    accum_.ppo.updates += s.ppo.updates;
    accum_.ed.total += s.ed.total;
    accum_.ed.reconstruction += s.ed.reconstruction;
    accum_.ed.action += s.ed.action;
    accum_.edges_min = std::min(accum_.edges_min, s.edges_min);
    accum_.edges_max = std::max(accum_.edges_max, s.edges_max);
    accum_.edges_mean += s.edges_mean;
  }
  ++accum_iterations_;
  return s;
}

EvalSummary Trainer::Evaluate(int episodes, int m_groups) const {
  if (episodes <= 0) throw UsageError("evaluate: at least one episode is required");
  const int m = m_groups < 0 ? config_.teams.m_groups : m_groups;
  const std::span<const TeamPolicy> pool = EvalPolicies();
  if (static_cast<int>(pool.size()) < m) {
    throw ConfigError("evaluation pool has fewer policies than groups requested");
  }
  RolloutOptions opts;
  opts.greedy = true;
  opts.team_mode = ActMode::kGreedy;
  if (config_.variant == Variant::kNaiveMarl) {
    opts.controlled_team = &pool_.train[BestPoolPolicy(pool_.train)];
  }
  std::vector<Episode> eps = RunParallel(episodes, config_.train.workers, [&](int k) {
    return CollectEpisode(config_, spec_, params_, pool, m,
                          DeriveSeed(config_.eval.seed, {kEvalStream, static_cast<uint64_t>(k)}),
                          opts);
  });
  return Summarize(eps);
}

MetricsRow Trainer::MakeRow(const EvalSummary& test) const {
  MetricsRow r;
  r.env_steps = env_steps_;
  r.iteration = iteration_;
  r.test = test;
  if (accum_iterations_ > 0) {
    const double n = accum_iterations_;
    r.train_return_mean = accum_.train_return_mean / n;
    r.actor_loss = accum_.ppo.actor_loss / n;
    r.critic_loss = accum_.ppo.critic_loss / n;
    r.entropy = accum_.ppo.entropy / n;
    r.grad_norm = accum_.ppo.grad_norm / n;
    r.ed_loss = accum_.ed.total / n;
    r.ed_reconstruction = accum_.ed.reconstruction / n;
    r.ed_action = accum_.ed.action / n;
    r.edges_mean = accum_.edges_mean / n;
    r.edges_min = accum_.edges_min;
    r.edges_max = accum_.edges_max;
  }
  return r;
}

void Trainer::WriteMetrics(const std::filesystem::path& out_dir) const {
  std::ofstream out(out_dir / "metrics.csv", std::ios::trunc);
  if (!out) throw ConfigError("cannot write metrics to " + out_dir.string());
  const std::vector<std::string> cols = MetricsColumns(config_.variant);
  for (size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << "\n";
  for (const std::string& line : metrics_lines_) out << line << "\n";
}

Trainer::Status Trainer::Train(const std::filesystem::path& out_dir,
                               const std::atomic<bool>* stop) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path ckpt = out_dir / "checkpoint.json";
  auto emit_row = [&] {
    const EvalSummary test = Evaluate(config_.eval.episodes);
    metrics_lines_.push_back(FormatMetricsRow(config_.variant, MakeRow(test)));
    accum_iterations_ = 0;
    accum_ = IterationStats{};
    std::cerr << "[train] env_steps=" << env_steps_ << " iteration=" << iteration_
              << " test_return=" << Num(test.mean_return) << " capture=" << Num(test.capture_rate)
              << "\n";
  };
  if (!spec_.flags().learns) {
    if (metrics_lines_.empty()) emit_row();
    SaveCheckpoint(ckpt);
    WriteMetrics(out_dir);
    return Status::kCompleted;
  }
  while (env_steps_ < config_.train.total_env_steps) {
    if (stop != nullptr && stop->load()) {
      SaveCheckpoint(ckpt);
      WriteMetrics(out_dir);
      return Status::kInterrupted;
    }
    try {
      RunIteration();
    } catch (const NumericError&) {
      SaveCheckpoint(ckpt);
      WriteMetrics(out_dir);
      throw;
    }
    if (config_.train.eval_interval > 0 && env_steps_ >= next_eval_) {
      emit_row();
      while (next_eval_ <= env_steps_) next_eval_ += config_.train.eval_interval;
    }
    if (config_.train.checkpoint_interval > 0 &&
        iteration_ % config_.train.checkpoint_interval == 0) {
      SaveCheckpoint(ckpt);
      WriteMetrics(out_dir);
    }
  }
  if (accum_iterations_ > 0 || metrics_lines_.empty()) emit_row();
  SaveCheckpoint(ckpt);
  WriteMetrics(out_dir);
  return Status::kCompleted;
}

json Trainer::Checkpoint() const {
  return {{"schema_version", 1},
          {"config", config_.ToJson()},
          {"config_hash", ChecksumHex(config_.Hash())},
          {"iteration", iteration_},
          {"env_steps", env_steps_},
          {"next_eval", next_eval_},
          {"update_rng", update_rng_.SerializeState()},
          {"adam", adam_.ToJson()},
          {"params",
           {{"agent_model", params_.agent_model.ToJson()},
            {"rfm", params_.rfm.ToJson()},
            {"actor", params_.actor.ToJson()},
            {"critic", params_.critic.ToJson()}}},
          {"pool", {{"train", PoolChecksums(pool_.train)}, {"eval", PoolChecksums(pool_.eval)}}},
          {"accum", StatsToJson(accum_)},
          {"accum_iterations", accum_iterations_},
          {"metrics", metrics_lines_}};
}

void Trainer::SaveCheckpoint(const std::filesystem::path& path) const {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ConfigError("cannot write checkpoint " + path.string());
    out << Checkpoint().dump() << "\n";
  }
  std::filesystem::rename(tmp, path);
}

json Trainer::ReadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("checkpoint " + path.string() + " is not valid JSON");
  return j;
}

Trainer Trainer::FromCheckpoint(const json& j, TeamPool pool) {
  try {
    ExperimentConfig config = ExperimentConfig::FromJson(j.at("config"));
    if (ChecksumHex(config.Hash()) != j.at("config_hash").get<std::string>()) {
      throw ConfigError("checkpoint config hash does not match its config");
    }
    Trainer t(std::move(config), std::move(pool));
    if (PoolChecksums(t.pool_.train) != j.at("pool").at("train") ||
        PoolChecksums(t.pool_.eval) != j.at("pool").at("eval")) {
      throw ConfigError("team pool differs from the one the checkpoint was trained with");
    }
    t.iteration_ = j.at("iteration").get<int>();
    t.env_steps_ = j.at("env_steps").get<int64_t>();
    t.next_eval_ = j.at("next_eval").get<int64_t>();
    t.update_rng_.RestoreState(j.at("update_rng").get<std::string>());
    t.adam_ = Adam::FromJson(j.at("adam"));
    const json& p = j.at("params");
    t.params_.agent_model = ParameterSet::FromJson(p.at("agent_model"));
    t.params_.rfm = ParameterSet::FromJson(p.at("rfm"));
    t.params_.actor = ParameterSet::FromJson(p.at("actor"));
    t.params_.critic = ParameterSet::FromJson(p.at("critic"));
    t.accum_ = StatsFromJson(j.at("accum"));
    t.accum_iterations_ = j.at("accum_iterations").get<int>();
    t.metrics_lines_ = j.at("metrics").get<std::vector<std::string>>();
    return t;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void CheckCompatible(const ExperimentConfig& trained, const ExperimentConfig& config) {
  const json a = trained.ToJson(), b = config.ToJson();
  for (const char* key : {"variant", "env", "agent_model", "rfm"}) {
    if (a.at(key) != b.at(key)) {
      throw ConfigError(std::string("config/checkpoint mismatch in '") + key + "'");
    }
  }
  if (a.at("policy").at("hidden_dim") != b.at("policy").at("hidden_dim")) {
    throw ConfigError("config/checkpoint mismatch in 'policy.hidden_dim'");
  }
}

std::vector<SweepRow> SweepGroups(const Trainer& trainer, std::span<const int> group_counts,
                                  int episodes) {
  std::vector<SweepRow> rows;
  const int n = trainer.config().env.n_agents;
  const int pool_size = static_cast<int>(trainer.config().eval.use_eval_pool
                                             ? trainer.pool().eval.size()
                                             : trainer.pool().train.size());
  for (int m : group_counts) {
    if (m < 0 || n < m + 1 || pool_size < m) {
      std::cerr << "warning: skipping m=" << m << " (needs n_total >= m + 1 and "
                << "a pool of at least m policies)\n";
      continue;
    }
    rows.push_back({m, trainer.Evaluate(episodes, m)});
  }
  return rows;
}

std::string FormatSweep(std::span<const SweepRow> rows) {
  std::string out = "m_groups,episodes,test_return_mean,test_return_std,test_capture_rate\n";
  for (const SweepRow& r : rows) {
    out += std::to_string(r.m_groups) + "," + std::to_string(r.summary.episodes) + "," +
           Num(r.summary.mean_return) + "," + Num(r.summary.std_return) + "," +
           Num(r.summary.capture_rate) + "\n";
  }
  return out;
}

}  // namespace mars
