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

#ifndef MARS_TRAINER_H_
#define MARS_TRAINER_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mars/config.h"
#include "mars/optim.h"
#include "mars/policy.h"
#include "mars/rng.h"
#include "mars/teams.h"

namespace mars {

// One full episode under the mixed joint policy.
struct Episode {
  TeamComposition composition;
  std::shared_ptr<const SkeletonGraph> graph;  // null for variants without RFM
  std::vector<StepRecord> steps;
  std::vector<LabeledSequence> ed_sequences;  // one per controlled agent
  double team_return = 0.0;
  bool captured = false;

  int length() const { return static_cast<int>(steps.size()); }
};

struct RolloutOptions {
  bool greedy = false;  // controlled agents
  ActMode team_mode = ActMode::kGreedy;
  double temperature = 1.0;
  // When set, the controlled agents act as one group of this frozen policy.
  const TeamPolicy* controlled_team = nullptr;
};

// Samples nothing: the composition is given. `episode_seed` fixes the
// skeleton, the environment start state and every sampled action.
Episode CollectRollout(const ExperimentConfig& config, const ModelSpec& spec,
                       const ModelParameters& params, std::span<const TeamPolicy> pool,
                       const TeamComposition& composition, uint64_t episode_seed,
                       const RolloutOptions& options);

// Samples the composition from `episode_seed` and collects the episode.
Episode CollectEpisode(const ExperimentConfig& config, const ModelSpec& spec,
                       const ModelParameters& params, std::span<const TeamPolicy> pool,
                       int m_groups, uint64_t episode_seed, const RolloutOptions& options);

struct EvalSummary {
  int episodes = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double capture_rate = 0.0;
  double mean_length = 0.0;
};

struct IterationStats {
  int64_t env_steps = 0;
  int episodes = 0;
  double train_return_mean = 0.0;
  UpdateStats ppo;
  EdLossValue ed;
  int edges_min = 0;
  int edges_max = 0;
  double edges_mean = 0.0;
};

struct MetricsRow {
  int64_t env_steps = 0;
  int iteration = 0;
  EvalSummary test;
  double train_return_mean = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;
  double ed_loss = 0.0;
  double ed_reconstruction = 0.0;
  double ed_action = 0.0;
  double edges_mean = 0.0;
  int edges_min = 0;
  int edges_max = 0;
};

std::vector<std::string> MetricsColumns(Variant v);
std::string FormatMetricsRow(Variant v, const MetricsRow& row);

// Loads the pool named by the config; missing or corrupt pools raise
// ConfigError. Configurations without uncontrolled groups need no pool.
TeamPool LoadPoolFor(const ExperimentConfig& config);

// Index of the train-pool policy with the best self-play return.
int BestPoolPolicy(std::span<const TeamPolicy> pool);

class Trainer {
 public:
  Trainer(ExperimentConfig config, TeamPool pool);

  const ExperimentConfig& config() const { return config_; }
  const ModelSpec& spec() const { return spec_; }
  const ModelParameters& params() const { return params_; }
  ModelParameters& mutable_params() { return params_; }
  const TeamPool& pool() const { return pool_; }
  int64_t env_steps() const { return env_steps_; }
  int iteration() const { return iteration_; }

  IterationStats RunIteration();
  // Greedy episodes on held-out compositions; `m_groups` < 0 uses the config.
  EvalSummary Evaluate(int episodes, int m_groups = -1) const;

  enum class Status { kCompleted, kInterrupted };
  // Trains to the configured budget, writing metrics.csv and checkpoint.json
  // under `out_dir`. Stops early (after checkpointing) when `stop` is set.
  Status Train(const std::filesystem::path& out_dir, const std::atomic<bool>* stop = nullptr);

  nlohmann::json Checkpoint() const;
  void SaveCheckpoint(const std::filesystem::path& path) const;
  static Trainer FromCheckpoint(const nlohmann::json& checkpoint, TeamPool pool);
  static nlohmann::json ReadCheckpoint(const std::filesystem::path& path);

 private:
  std::span<const TeamPolicy> TrainPolicies() const;
  std::span<const TeamPolicy> EvalPolicies() const;
  MetricsRow MakeRow(const EvalSummary& test) const;
  void WriteMetrics(const std::filesystem::path& out_dir) const;

  ExperimentConfig config_;
  ModelSpec spec_;
  TeamPool pool_;
  ModelParameters params_;
  Adam adam_;
  Rng update_rng_;
  int64_t env_steps_ = 0;
  int iteration_ = 0;
  int64_t next_eval_ = 0;
  // Training statistics accumulated since the last metrics row.
  IterationStats accum_;
  int accum_iterations_ = 0;
  std::vector<std::string> metrics_lines_;
};

// Fails with ConfigError when `config` cannot evaluate a checkpoint trained
// under `trained` (different variant, environment or model shapes).
void CheckCompatible(const ExperimentConfig& trained, const ExperimentConfig& config);

struct SweepRow {
  int m_groups = 0;
  EvalSummary summary;
};

// Evaluates the trained model at each group count; infeasible counts are
// skipped with a warning on stderr.
std::vector<SweepRow> SweepGroups(const Trainer& trainer, std::span<const int> group_counts,
                                  int episodes);

std::string FormatSweep(std::span<const SweepRow> rows);

}  // namespace mars

#endif  // MARS_TRAINER_H_
