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

#include "mars/env.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <unordered_map>

#include "mars/errors.h"

namespace mars {
namespace {

int Manhattan(Cell a, Cell b) {
  return std::abs(a.row - b.row) + std::abs(a.col - b.col);
}

bool OnGrid(Cell c, int g) {
  return c.row >= 0 && c.row < g && c.col >= 0 && c.col < g;
}

struct Outcome {
  double reward = 0.0;
  bool done = false;
  bool captured = false;
  int on_prey = 0;
};

// Predator moves, capture check, time advance. The prey is moved by the
// caller so that the stochastic and deterministic paths share this code.
Outcome AdvancePredators(const EnvConfig& cfg, EnvState& s,
                         std::span<const int> joint) {
  for (size_t i = 0; i < s.agents.size(); ++i) {
    s.agents[i] = ApplyMove(s.agents[i], joint[i], cfg.grid_size);
  }
  ++s.t;
  Outcome o;
  for (const Cell& a : s.agents) o.on_prey += (a == s.prey);
  o.captured = o.on_prey >= cfg.capture_threshold;
  o.reward = o.captured ? cfg.reward_capture : cfg.step_cost;
  o.done = s.t >= cfg.episode_limit || (o.captured && cfg.capture_terminal);
  s.done = o.done;
  return o;
}

}  // namespace

std::string PreyPolicyName(PreyPolicy p) {
  return p == PreyPolicy::kEvade ? "evade" : "static";
}

PreyPolicy ParsePreyPolicy(const std::string& name) {
  if (name == "evade") return PreyPolicy::kEvade;
  if (name == "static") return PreyPolicy::kStatic;
  throw ConfigError("unknown prey policy '" + name + "'");
}

void EnvConfig::Validate() const {
  if (grid_size < 3) throw ConfigError("env.grid_size must be >= 3");
  if (n_agents < 1) throw ConfigError("env.n_agents must be >= 1");
  if (episode_limit < 1) throw ConfigError("env.episode_limit must be >= 1");
  if (n_agents > grid_size * grid_size - 1) {
    throw ConfigError("env.n_agents must be <= grid_size^2 - 1");
  }
  if (capture_threshold < 1) throw ConfigError("env.capture_threshold must be >= 1");
  if (!(prey_move_prob >= 0.0 && prey_move_prob <= 1.0)) {
    throw ConfigError("env.prey_move_prob must lie in [0, 1]");
  }
}

Cell ApplyMove(Cell cell, int action, int grid_size) {
  Cell next = cell;
  switch (action) {
    case kUp: --next.row; break;
    case kDown: ++next.row; break;
    case kLeft: --next.col; break;
    case kRight: ++next.col; break;
    case kStay: break;
    default: throw UsageError("action " + std::to_string(action) + " out of range");
  }
  return OnGrid(next, grid_size) ? next : cell;
}

Cell EvadeMove(Cell prey, std::span<const Cell> predators, int grid_size) {
  static constexpr int kOrder[] = {kUp, kRight, kDown, kLeft, kStay};
  Cell best = prey;
  int best_score = -1;
  for (int a : kOrder) {
    Cell c = prey;
    switch (a) {
      case kUp: --c.row; break;
      case kDown: ++c.row; break;
      case kLeft: --c.col; break;
      case kRight: ++c.col; break;
      default: break;
    }
    if (!OnGrid(c, grid_size)) continue;
    int nearest = std::numeric_limits<int>::max();
    for (const Cell& p : predators) nearest = std::min(nearest, Manhattan(c, p));
    if (nearest > best_score) {
      best_score = nearest;
      best = c;
    }
  }
  return best;
}

PredatorPrey::PredatorPrey(EnvConfig config) : config_(config) {
  config_.Validate();
}

std::vector<Observation> PredatorPrey::Reset(uint64_t seed) {
  const int g = config_.grid_size;
  std::vector<int> cells(g * g);
  for (int i = 0; i < g * g; ++i) cells[i] = i;
  Rng rng(DeriveSeed(seed, {0x5e7}));
  rng.Shuffle(cells);
  EnvState s;
  s.prey = {cells[0] / g, cells[0] % g};
  for (int i = 0; i < config_.n_agents; ++i) {
    s.agents.push_back({cells[i + 1] / g, cells[i + 1] % g});
  }
  prey_rng_ = Rng(DeriveSeed(config_.prey_policy_seed, {seed}));
  return SetState(std::move(s));
}

std::vector<Observation> PredatorPrey::SetState(EnvState state) {
  if (static_cast<int>(state.agents.size()) != config_.n_agents) {
    throw ConfigError("state has the wrong number of agents");
  }
  for (const Cell& a : state.agents) {
    if (!OnGrid(a, config_.grid_size)) throw ConfigError("agent off grid");
  }
  if (!OnGrid(state.prey, config_.grid_size)) throw ConfigError("prey off grid");
  state_ = std::move(state);
  started_ = true;
  return ObserveAll();
}

StepResult PredatorPrey::Step(std::span<const int> joint_action) {
  if (!started_) throw UsageError("step before reset");
  if (state_.done) throw UsageError("step after episode end");
  if (static_cast<int>(joint_action.size()) != config_.n_agents) {
    throw UsageError("joint action has " + std::to_string(joint_action.size()) +
                     " entries, expected " + std::to_string(config_.n_agents));
  }
  for (int a : joint_action) {
    if (a < 0 || a >= kNumActions) {
      throw UsageError("action " + std::to_string(a) + " out of range");
    }
  }
  const Outcome o = AdvancePredators(config_, state_, joint_action);
  if (!o.done && config_.prey_policy == PreyPolicy::kEvade) {
    bool acts = true;
    if (config_.prey_move_prob < 1.0) {
      acts = prey_rng_.Uniform() < config_.prey_move_prob;
    }
    if (acts) state_.prey = EvadeMove(state_.prey, state_.agents, config_.grid_size);
  }
  StepResult r;
  r.observations = ObserveAll();
  r.reward = o.reward;
  r.done = o.done;
  r.info["captured"] = o.captured ? 1.0 : 0.0;
  r.info["predators_on_prey"] = o.on_prey;
  return r;
}

Observation PredatorPrey::Observe(int agent) const {
  const double scale = std::max(1, config_.grid_size - 1);
  const Cell self = state_.agents.at(agent);
  Observation o;
  o.reserve(config_.ObservationDim());
  o.push_back(self.row / scale);
  o.push_back(self.col / scale);
  o.push_back((state_.prey.row - self.row) / scale);
  o.push_back((state_.prey.col - self.col) / scale);
  for (int j = 0; j < config_.n_agents; ++j) {
    if (j == agent) continue;
    o.push_back((state_.agents[j].row - self.row) / scale);
    o.push_back((state_.agents[j].col - self.col) / scale);
  }
  o.push_back(static_cast<double>(state_.t) / config_.episode_limit);
  return o;
}

std::vector<Observation> PredatorPrey::ObserveAll() const {
  std::vector<Observation> out;
  out.reserve(config_.n_agents);
  for (int i = 0; i < config_.n_agents; ++i) out.push_back(Observe(i));
  return out;
}

namespace {

class BoundSearch {
 public:
  explicit BoundSearch(const EnvConfig& cfg) : cfg_(cfg) {
    cells_ = cfg.grid_size * cfg.grid_size;
  }

  double Value(const EnvState& s) {
    if (s.t >= cfg_.episode_limit) return 0.0;
    const uint64_t key = Key(s);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    const int n = static_cast<int>(s.agents.size());
    int joints = 1;
    for (int i = 0; i < n; ++i) joints *= kNumActions;
    std::vector<int> joint(n);
    double best = -std::numeric_limits<double>::infinity();
    for (int code = 0; code < joints; ++code) {
      int c = code;
      for (int i = 0; i < n; ++i) {
        joint[i] = c % kNumActions;
        c /= kNumActions;
      }
      EnvState next = s;
      const Outcome o = AdvancePredators(cfg_, next, joint);
      double v = o.reward;
      if (!o.done) {
        if (cfg_.prey_policy == PreyPolicy::kEvade) {
          next.prey = EvadeMove(next.prey, next.agents, cfg_.grid_size);
        }
        v += Value(next);
      }
      best = std::max(best, v);
    }
    memo_.emplace(key, best);
    return best;
  }

 private:
  uint64_t Key(const EnvState& s) const {
    uint64_t k = static_cast<uint64_t>(s.t);
    auto push = [&](Cell c) {
      k = k * static_cast<uint64_t>(cells_) +
          static_cast<uint64_t>(c.row * cfg_.grid_size + c.col);
    };
    push(s.prey);
    for (const Cell& a : s.agents) push(a);
    return k;
  }

  const EnvConfig& cfg_;
  int cells_;
  std::unordered_map<uint64_t, double> memo_;
};

}  // namespace

double OptimalReturnBound(const EnvConfig& config, const EnvState& start) {
  if (config.episode_limit == 0) return 0.0;
  config.Validate();
  if (config.grid_size > 5 || config.n_agents > 3) {
    throw ConfigError("optimal_return_bound: instance too large (grid_size <= 5 "
                      "and n_agents <= 3 required)");
  }
  if (config.prey_policy == PreyPolicy::kEvade && config.prey_move_prob < 1.0) {
    throw ConfigError("optimal_return_bound: prey policy must be deterministic");
  }
  if (static_cast<int>(start.agents.size()) != config.n_agents) {
    throw ConfigError("optimal_return_bound: start state does not match config");
  }
  if (start.done) return 0.0;
  BoundSearch search(config);
  return search.Value(start);
}

double OptimalReturnBound(const EnvConfig& config, uint64_t seed) {
  if (config.episode_limit == 0) return 0.0;
  PredatorPrey env(config);
  env.Reset(seed);
  return OptimalReturnBound(config, env.state());
}

}  // namespace mars
