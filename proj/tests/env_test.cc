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

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <vector>

#include "gtest/gtest.h"
#include "mars/env.h"
#include "mars/errors.h"
#include "mars/rng.h"

namespace mars {
namespace {

EnvConfig SmallConfig(int grid, int n, int limit) {
  EnvConfig c;
  c.grid_size = grid;
  c.n_agents = n;
  c.episode_limit = limit;
  return c;
}

TEST(EnvResetTest, SameSeedSameObservations) {
  PredatorPrey a(SmallConfig(5, 3, 50)), b(SmallConfig(5, 3, 50));
  EXPECT_EQ(a.Reset(17), b.Reset(17));
  EXPECT_EQ(a.state(), b.state());
  PredatorPrey c(SmallConfig(5, 3, 50));
  int differ = 0;
  for (uint64_t s = 0; s < 20; ++s) differ += !(c.Reset(s) == a.Reset(17));
  EXPECT_GE(differ, 19);
}

TEST(EnvResetTest, FullGridIsValid) {
  for (int g = 3; g <= 5; ++g) {
    PredatorPrey env(SmallConfig(g, g * g - 1, 10));
    env.Reset(3);
    std::set<std::pair<int, int>> cells;
    cells.insert({env.state().prey.row, env.state().prey.col});
    for (const Cell& c : env.state().agents) cells.insert({c.row, c.col});
    EXPECT_EQ(static_cast<int>(cells.size()), g * g);
  }
  EXPECT_THROW(PredatorPrey(SmallConfig(3, 9, 10)), ConfigError);
}

TEST(EnvResetTest, ObservationDimension) {
  EXPECT_EQ(SmallConfig(5, 3, 50).ObservationDim(), 9);
  PredatorPrey env(SmallConfig(5, 3, 50));
  for (const auto& o : env.Reset(1)) EXPECT_EQ(o.size(), 9u);
}

TEST(EnvObserveTest, LayoutMatchesState) {
  PredatorPrey env(SmallConfig(5, 3, 50));
  EnvState s;
  s.agents = {{0, 0}, {4, 2}, {1, 3}};
  s.prey = {2, 2};
  s.t = 10;
  auto obs = env.SetState(s);
  const double k = 4.0;
  const std::vector<double> expected1 = {4 / k, 2 / k, -2 / k, 0 / k,
                                         -4 / k, -2 / k, -3 / k, 1 / k, 0.2};
  ASSERT_EQ(obs[1].size(), expected1.size());
  for (size_t i = 0; i < expected1.size(); ++i) EXPECT_DOUBLE_EQ(obs[1][i], expected1[i]);
}

TEST(EnvStepTest, TwoPredatorsOnPreyCapture) {
  PredatorPrey env(SmallConfig(5, 3, 50));
  EnvState s;
  s.agents = {{2, 1}, {1, 2}, {4, 4}};
  s.prey = {2, 2};
  env.SetState(s);
  const int joint[] = {kRight, kDown, kStay};
  StepResult r = env.Step(joint);
  EXPECT_DOUBLE_EQ(r.reward, 1.0);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.info.at("captured"), 1.0);
  EXPECT_EQ(r.info.at("predators_on_prey"), 2.0);
  EXPECT_THROW(env.Step(joint), UsageError);
}

TEST(EnvStepTest, OnePredatorOnPreyIsStepCost) {
  PredatorPrey env(SmallConfig(5, 3, 50));
  EnvState s;
  s.agents = {{2, 1}, {0, 0}, {4, 4}};
  s.prey = {2, 2};
  env.SetState(s);
  const int joint[] = {kRight, kStay, kStay};
  StepResult r = env.Step(joint);
  EXPECT_DOUBLE_EQ(r.reward, -0.01);
  EXPECT_FALSE(r.done);
  EXPECT_EQ(r.info.at("predators_on_prey"), 1.0);
}

TEST(EnvStepTest, WallMoveIsStay) {
  PredatorPrey env(SmallConfig(5, 1, 50));
  EnvState s;
  s.agents = {{2, 0}};
  s.prey = {4, 4};
  env.SetState(s);
  const int joint[] = {kLeft};
  env.Step(joint);
  EXPECT_EQ(env.state().agents[0], (Cell{2, 0}));
  EXPECT_EQ(ApplyMove({0, 3}, kUp, 5), (Cell{0, 3}));
  EXPECT_EQ(ApplyMove({4, 3}, kDown, 5), (Cell{4, 3}));
  EXPECT_EQ(ApplyMove({1, 4}, kRight, 5), (Cell{1, 4}));
}

TEST(EnvStepTest, BadJointActionIsUsageError) {
  PredatorPrey env(SmallConfig(5, 2, 50));
  env.Reset(1);
  const int short_joint[] = {kUp};
  const int bad_action[] = {kUp, 7};
  EXPECT_THROW(env.Step(short_joint), UsageError);
  EXPECT_THROW(env.Step(bad_action), UsageError);
}

TEST(EnvStepTest, StaticPreyNeverMoves) {
  EnvConfig c = SmallConfig(5, 2, 30);
  c.prey_policy = PreyPolicy::kStatic;
  PredatorPrey env(c);
  env.Reset(4);
  const Cell prey = env.state().prey;
  Rng rng(4);
  while (!env.state().done) {
    const int joint[] = {rng.UniformInt(5), rng.UniformInt(5)};
    env.Step(joint);
    EXPECT_EQ(env.state().prey, prey);
  }
}

TEST(EvadeMoveTest, MaximizesNearestDistanceWithTieOrder) {
  // Predator directly below: up takes the prey farthest.
  const Cell below[] = {{3, 2}};
  EXPECT_EQ(EvadeMove({2, 2}, below, 5), (Cell{1, 2}));
  // Predator on the prey cell: up, right, down, left all reach distance 1,
  // the first in order (up) wins.
  const Cell same[] = {{2, 2}};
  EXPECT_EQ(EvadeMove({2, 2}, same, 5), (Cell{1, 2}));
  // At the top edge up is unavailable, right comes next.
  EXPECT_EQ(EvadeMove({0, 2}, same, 5).row, 0);
  const Cell top[] = {{0, 2}};
  EXPECT_EQ(EvadeMove({0, 2}, top, 5), (Cell{0, 3}));
  // Cornered between two predators the prey stays.
  const Cell pinned[] = {{0, 1}, {1, 0}};
  EXPECT_EQ(EvadeMove({0, 0}, pinned, 5), (Cell{0, 0}));
}

// Reference for one transition: predators move, then capture is judged on
// the prey's pre-move cell.
TEST(EnvPropertyTest, RewardPositiveIffTwoOnPrey) {
  for (int n = 2; n <= 4; ++n) {
    PredatorPrey env(SmallConfig(4, n, 40));
    Rng rng(n);
    for (uint64_t ep = 0; ep < 200; ++ep) {
      env.Reset(ep);
      int length = 0;
      while (!env.state().done) {
        const EnvState before = env.state();
        std::vector<int> joint(n);
        for (int& a : joint) a = rng.UniformInt(5);
        StepResult r = env.Step(joint);
        ++length;
        int on = 0;
        for (int i = 0; i < n; ++i) on += ApplyMove(before.agents[i], joint[i], 4) == before.prey;
        EXPECT_EQ(r.reward > 0, on >= 2);
        EXPECT_DOUBLE_EQ(r.reward, on >= 2 ? 1.0 : -0.01);
      }
      EXPECT_LE(length, 40);
    }
  }
}

TEST(EnvPropertyTest, ActionSequenceDeterminesResults) {
  auto run = [](uint64_t seed) {
    EnvConfig c = SmallConfig(5, 3, 50);
    c.prey_move_prob = 0.6;
    PredatorPrey env(c);
    env.Reset(seed);
    Rng rng(99);
    std::vector<double> trace;
    while (!env.state().done) {
      const int joint[] = {rng.UniformInt(5), rng.UniformInt(5), rng.UniformInt(5)};
      StepResult r = env.Step(joint);
      trace.push_back(r.reward);
      for (const auto& o : r.observations) trace.insert(trace.end(), o.begin(), o.end());
    }
    return trace;
  };
  EXPECT_EQ(run(5), run(5));
}

// Exhaustive search written independently of the library's memoized search.
double BruteForce(const EnvConfig& c, const EnvState& s) {
  if (s.done || s.t >= c.episode_limit) return 0.0;
  const int n = c.n_agents;
  int total = 1;
  for (int i = 0; i < n; ++i) total *= kNumActions;
  double best = -1e9;
  for (int code = 0; code < total; ++code) {
    std::vector<int> joint(n);
    int x = code;
    for (int i = 0; i < n; ++i) {
      joint[i] = x % kNumActions;
      x /= kNumActions;
    }
    PredatorPrey env(c);
    env.SetState(s);
    StepResult r = env.Step(joint);
    best = std::max(best, r.reward + BruteForce(c, env.state()));
  }
  return best;
}

TEST(OptimalBoundTest, AdjacentPairCapturesInOneStep) {
  EnvConfig c = SmallConfig(3, 2, 2);
  EnvState s;
  s.agents = {{1, 0}, {0, 1}};
  s.prey = {1, 1};
  EXPECT_DOUBLE_EQ(OptimalReturnBound(c, s), 1.0);
  EXPECT_DOUBLE_EQ(BruteForce(c, s), 1.0);
}

TEST(OptimalBoundTest, ZeroHorizonIsZero) {
  EnvConfig c = SmallConfig(3, 2, 0);
  EnvState s;
  s.agents = {{1, 0}, {0, 1}};
  s.prey = {1, 1};
  EXPECT_EQ(OptimalReturnBound(c, s), 0.0);
}

TEST(OptimalBoundTest, MatchesBruteForce) {
  for (uint64_t seed = 0; seed < 6; ++seed) {
    EnvConfig c = SmallConfig(3 + static_cast<int>(seed % 2), 2, 3);
    PredatorPrey env(c);
    env.Reset(seed);
    EXPECT_NEAR(OptimalReturnBound(c, env.state()), BruteForce(c, env.state()), 1e-12)
        << "seed " << seed;
  }
  EnvConfig one = SmallConfig(4, 1, 5);
  one.capture_threshold = 1;
  one.prey_policy = PreyPolicy::kStatic;
  PredatorPrey env(one);
  env.Reset(2);
  EXPECT_NEAR(OptimalReturnBound(one, env.state()), BruteForce(one, env.state()), 1e-12);
}

TEST(OptimalBoundTest, NonincreasingAsGridGrows) {
  EnvState s;
  s.agents = {{0, 0}, {2, 0}};
  s.prey = {1, 2};
  double previous = 1e9;
  for (int g = 3; g <= 5; ++g) {
    const double bound = OptimalReturnBound(SmallConfig(g, 2, 4), s);
    EXPECT_LE(bound, previous + 1e-12) << "grid " << g;
    previous = bound;
  }
}

TEST(OptimalBoundTest, RefusesLargeOrStochasticInstances) {
  EXPECT_THROW(OptimalReturnBound(SmallConfig(6, 2, 5), uint64_t{1}), ConfigError);
  EXPECT_THROW(OptimalReturnBound(SmallConfig(5, 4, 5), uint64_t{1}), ConfigError);
  EnvConfig c = SmallConfig(4, 2, 5);
  c.prey_move_prob = 0.5;
  EXPECT_THROW(OptimalReturnBound(c, uint64_t{1}), ConfigError);
}

}  // namespace
}  // namespace mars
