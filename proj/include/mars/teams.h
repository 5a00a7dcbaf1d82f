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

#ifndef MARS_TEAMS_H_
#define MARS_TEAMS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mars/env.h"
#include "mars/parameters.h"
#include "mars/rng.h"

namespace mars {

// Five self-play recipes built on independent Q-learning. They differ in
// exploration schedule, reward-shaping sign, action tie-breaking order,
// discount and network width, which is enough to make teams trained under
// different recipes (or seeds) settle on incompatible conventions.
enum class ConventionFamily {
  kEpsLinear,
  kApproachBonus,
  kSpreadBonus,
  kBoltzmannCluster,
  kShortHorizon,
};

inline constexpr std::array<ConventionFamily, 5> kAllFamilies = {
    ConventionFamily::kEpsLinear, ConventionFamily::kApproachBonus,
    ConventionFamily::kSpreadBonus, ConventionFamily::kBoltzmannCluster,
    ConventionFamily::kShortHorizon};

std::string FamilyName(ConventionFamily f);
ConventionFamily ParseFamily(const std::string& name);

struct FamilyRecipe {
  double eps_start = 1.0;
  double eps_end = 0.05;
  double decay_fraction = 0.5;  // of the budget
  bool boltzmann = false;       // eps_* are temperatures when true
  double approach_bonus = 0.0;  // x decrease in prey distance
  double spread_bonus = 0.0;    // x increase in nearest-teammate distance
  double gamma = 0.95;
  int width = 32;
  // Q-network output unit k scores env action action_order[k]; greedy ties
  // go to the lowest unit.
  std::array<int, kNumActions> action_order = {kUp, kDown, kLeft, kRight, kStay};
  double learning_rate = 1e-3;
  int target_sync = 250;
};

FamilyRecipe RecipeFor(ConventionFamily f);
std::map<std::string, double> Hyperparameters(ConventionFamily f);

// Per-agent features seen by uncontrolled policies, independent of the total
// agent count: own position (2), prey offset (2), nearest-teammate offset (2),
// rank within the group in [0, 1], elapsed-time fraction. A lone agent treats
// the nearest other agent as its teammate.
inline constexpr int kTeamFeatureDim = 8;

std::array<double, kTeamFeatureDim> TeamFeatures(std::span<const double> obs,
                                                 int self_id,
                                                 std::span<const int> member_ids,
                                                 int rank, int n_agents);

// Frozen joint policy of one internally familiar group (shared Q-network).
struct TeamPolicy {
  ConventionFamily family = ConventionFamily::kEpsLinear;
  uint64_t seed = 0;
  int group_size = 1;
  // Greedy self-play return of the kept snapshot.
  double self_play_return = 0.0;
  ParameterSet q;

  uint64_t Checksum() const { return q.Checksum(); }
  std::array<double, kNumActions> ActionValues(
      const std::array<double, kTeamFeatureDim>& features) const;
  int GreedyAction(const std::array<double, kTeamFeatureDim>& features) const;
};

enum class ActMode { kGreedy, kStochastic };

// Actions for one group. `member_ids` lists the group's agent ids (rank order)
// and `member_obs` their latest observations in the same order.
std::vector<int> ActUncontrolled(const TeamPolicy& policy,
                                 std::span<const int> member_ids,
                                 std::span<const Observation> member_obs,
                                 int n_agents, ActMode mode = ActMode::kGreedy,
                                 double temperature = 1.0, Rng* rng = nullptr);

struct PretrainOptions {
  int budget_steps = 60000;
  int batch_size = 32;
  int replay_capacity = 10000;
  int warmup_steps = 500;
  // Greedy self-play evaluation; the best snapshot is kept.
  int eval_interval = 5000;
  int eval_episodes = 20;
};

double SelfPlayReturn(const TeamPolicy& policy, const EnvConfig& env, int episodes,
                      uint64_t seed);

// Self-play independent Q-learning of a group of `size` agents on `env`
// (n_agents is overridden with `size`). Deterministic given the seed.
TeamPolicy PretrainTeam(ConventionFamily family, int size, uint64_t seed,
                        const EnvConfig& env, const PretrainOptions& options);

// Fraction of probe feature vectors on which the greedy actions differ.
double DisagreementRate(const TeamPolicy& a, const TeamPolicy& b,
                        std::span<const std::array<double, kTeamFeatureDim>> probes);
std::vector<std::array<double, kTeamFeatureDim>> SampleProbeFeatures(int count,
                                                                     int grid_size,
                                                                     Rng& rng);

// Held-out ("eval") policies come from seeds disjoint from the training ones.
struct TeamPool {
  std::vector<TeamPolicy> train;
  std::vector<TeamPolicy> eval;
};

struct PoolSpec {
  std::vector<ConventionFamily> families{kAllFamilies.begin(), kAllFamilies.end()};
  std::vector<uint64_t> train_seeds = {1, 2};
  std::vector<uint64_t> eval_seeds = {101};
  int group_size = 2;
  PretrainOptions pretrain;
};

TeamPool PretrainPool(const PoolSpec& spec, const EnvConfig& env);

// Directory layout: manifest.json plus one parameter file per policy. The
// manifest lists family, seed, size, split, file and checksum per entry.
void SavePool(const TeamPool& pool, const std::filesystem::path& dir);
TeamPool LoadPool(const std::filesystem::path& dir);

struct Group {
  int policy_index = 0;      // index into the pool split in use
  std::vector<int> members;  // ascending agent ids
  friend bool operator==(const Group&, const Group&) = default;
};

// One episode's partition of agents 0..n_total-1 into the controlled set and
// uncontrolled groups.
struct TeamComposition {
  int n_total = 0;
  std::vector<int> controlled;
  std::vector<Group> groups;

  int n_controlled() const { return static_cast<int>(controlled.size()); }
  // 0 for controlled agents, g + 1 for members of groups[g].
  std::vector<int> GroupOf() const;
  // Empty string when the partition is valid.
  std::string Validate() const;
  friend bool operator==(const TeamComposition&, const TeamComposition&) = default;
};

// Draws m distinct policies uniformly from a pool of `pool_size` and group
// sizes uniformly over ordered compositions (every group and the controlled
// set nonempty), then assigns shuffled agent ids.
TeamComposition SampleComposition(int pool_size, int n_total, int m_groups, Rng& rng);

}  // namespace mars

#endif  // MARS_TEAMS_H_
