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

#ifndef MARS_ENV_H_
#define MARS_ENV_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mars/rng.h"

namespace mars {

inline constexpr int kNumActions = 5;

enum Action : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4 };

enum class PreyPolicy { kEvade, kStatic };

std::string PreyPolicyName(PreyPolicy p);
PreyPolicy ParsePreyPolicy(const std::string& name);

struct EnvConfig {
  int grid_size = 5;
  int n_agents = 3;
  int episode_limit = 50;
  uint64_t prey_policy_seed = 0;
  double reward_capture = 1.0;
  double step_cost = -0.01;
  // Predators that must share the prey's cell for a capture.
  int capture_threshold = 2;
  bool capture_terminal = true;
  PreyPolicy prey_policy = PreyPolicy::kEvade;
  // Probability that the evading prey acts on a given step; it stays otherwise.
  double prey_move_prob = 1.0;

  void Validate() const;
  // own position (2) + prey offset (2) + other agents' offsets (2(n-1)) +
  // elapsed-time fraction (1).
  int ObservationDim() const { return 5 + 2 * (n_agents - 1); }
};

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct EnvState {
  std::vector<Cell> agents;
  Cell prey;
  int t = 0;
  bool done = false;
  friend bool operator==(const EnvState&, const EnvState&) = default;
};

using Observation = std::vector<double>;

struct StepResult {
  std::vector<Observation> observations;
  double reward = 0.0;
  bool done = false;
  // "captured" (0/1) and "predators_on_prey".
  std::map<std::string, double> info;
};

// Discrete predator-prey on a square grid with a shared team reward.
//
// Each step: predators move (off-grid moves become stays), the capture
// condition is checked, then the prey moves by its scripted policy.
class PredatorPrey {
 public:
  explicit PredatorPrey(EnvConfig config);

  std::vector<Observation> Reset(uint64_t seed);
  // Places the episode in an explicit state; used by search and tests.
  std::vector<Observation> SetState(EnvState state);
  StepResult Step(std::span<const int> joint_action);

  Observation Observe(int agent) const;
  std::vector<Observation> ObserveAll() const;

  const EnvState& state() const { return state_; }
  const EnvConfig& config() const { return config_; }

 private:
  EnvConfig config_;
  EnvState state_;
  Rng prey_rng_;
  bool started_ = false;
};

Cell ApplyMove(Cell cell, int action, int grid_size);

// Scripted evasion: maximize the Manhattan distance to the nearest predator;
// candidates are tried in the order up, right, down, left, stay and the first
// maximum wins.
Cell EvadeMove(Cell prey, std::span<const Cell> predators, int grid_size);

// Upper bound on the undiscounted episodic return from `start`, by exhaustive
// search over joint action sequences against the deterministic prey. Refuses
// (ConfigError) when grid_size > 5, n_agents > 3 or the prey is stochastic.
double OptimalReturnBound(const EnvConfig& config, const EnvState& start);
double OptimalReturnBound(const EnvConfig& config, uint64_t seed);

}  // namespace mars

#endif  // MARS_ENV_H_
