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
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "mars/env.h"
#include "mars/errors.h"
#include "mars/rng.h"
#include "mars/teams.h"

namespace mars {
namespace {

EnvConfig TeamEnv() {
  EnvConfig c;
  c.grid_size = 5;
  c.n_agents = 2;
  return c;
}

PretrainOptions Quick() {
  PretrainOptions o;
  o.budget_steps = 3000;
  o.warmup_steps = 200;
  o.eval_interval = 1000;
  o.eval_episodes = 3;
  return o;
}

class PretrainedTeamsTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    a1_ = new TeamPolicy(PretrainTeam(ConventionFamily::kEpsLinear, 2, 1, TeamEnv(), Quick()));
    a2_ = new TeamPolicy(PretrainTeam(ConventionFamily::kEpsLinear, 2, 2, TeamEnv(), Quick()));
    b1_ = new TeamPolicy(PretrainTeam(ConventionFamily::kSpreadBonus, 2, 1, TeamEnv(), Quick()));
  }
  static void TearDownTestSuite() {
    delete a1_;
    delete a2_;
    delete b1_;
  }
  static TeamPolicy* a1_;
  static TeamPolicy* a2_;
  static TeamPolicy* b1_;
};

TeamPolicy* PretrainedTeamsTest::a1_ = nullptr;
TeamPolicy* PretrainedTeamsTest::a2_ = nullptr;
TeamPolicy* PretrainedTeamsTest::b1_ = nullptr;

TEST_F(PretrainedTeamsTest, SameSeedIsBitIdentical) {
  TeamPolicy again = PretrainTeam(ConventionFamily::kEpsLinear, 2, 1, TeamEnv(), Quick());
  EXPECT_EQ(again.q, a1_->q);
  EXPECT_EQ(again.self_play_return, a1_->self_play_return);
}

TEST_F(PretrainedTeamsTest, SeedsAndFamiliesDisagree) {
  Rng rng(5);
  const auto probes = SampleProbeFeatures(1000, 5, rng);
  EXPECT_GT(DisagreementRate(*a1_, *a2_, probes), 0.10);
  EXPECT_GT(DisagreementRate(*a1_, *b1_, probes), 0.10);
  EXPECT_EQ(DisagreementRate(*a1_, *a1_, probes), 0.0);
}

TEST_F(PretrainedTeamsTest, ActUncontrolledIsDeterministicAndInRange) {
  EnvConfig env = TeamEnv();
  env.n_agents = 4;
  PredatorPrey world(env);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const auto obs = world.Reset(seed);
    const int ids[] = {3, 1};
    const std::vector<Observation> member_obs = {obs[3], obs[1]};
    const auto first = ActUncontrolled(*a1_, ids, member_obs, 4);
    EXPECT_EQ(first, ActUncontrolled(*a1_, ids, member_obs, 4));
    ASSERT_EQ(first.size(), 2u);
    for (int a : first) {
      EXPECT_GE(a, 0);
      EXPECT_LT(a, kNumActions);
    }
    const int solo[] = {2};
    const std::vector<Observation> solo_obs = {obs[2]};
    EXPECT_EQ(ActUncontrolled(*a1_, solo, solo_obs, 4).size(), 1u);
  }
}

TEST_F(PretrainedTeamsTest, StochasticModeIsSeeded) {
  PredatorPrey world(TeamEnv());
  const auto obs = world.Reset(3);
  const int ids[] = {0, 1};
  Rng r1(9), r2(9);
  for (int k = 0; k < 10; ++k) {
    EXPECT_EQ(ActUncontrolled(*a1_, ids, obs, 2, ActMode::kStochastic, 1.0, &r1),
              ActUncontrolled(*a1_, ids, obs, 2, ActMode::kStochastic, 1.0, &r2));
  }
  EXPECT_THROW(ActUncontrolled(*a1_, ids, obs, 2, ActMode::kStochastic, 1.0, nullptr), UsageError);
}

TEST_F(PretrainedTeamsTest, MismatchedHistoriesAreUsageError) {
  PredatorPrey world(TeamEnv());
  const auto obs = world.Reset(3);
  const int ids[] = {0, 1};
  const std::vector<Observation> one = {obs[0]};
  EXPECT_THROW(ActUncontrolled(*a1_, ids, one, 2), UsageError);
  const int bad_ids[] = {0, 5};
  EXPECT_THROW(ActUncontrolled(*a1_, bad_ids, obs, 2), UsageError);
  const std::vector<Observation> wrong_width = {Observation(3, 0.0), Observation(3, 0.0)};
  EXPECT_THROW(ActUncontrolled(*a1_, ids, wrong_width, 2), UsageError);
}

TEST_F(PretrainedTeamsTest, PoolRoundTripAndCorruption) {
  const auto dir = std::filesystem::temp_directory_path() / "mars_pool_test";
  std::filesystem::remove_all(dir);
  TeamPool pool;
  pool.train = {*a1_, *b1_};
  pool.eval = {*a2_};
  SavePool(pool, dir);
  TeamPool back = LoadPool(dir);
  ASSERT_EQ(back.train.size(), 2u);
  ASSERT_EQ(back.eval.size(), 1u);
  EXPECT_EQ(back.train[1].q, b1_->q);
  EXPECT_EQ(back.train[1].family, ConventionFamily::kSpreadBonus);
  EXPECT_EQ(back.eval[0].seed, 2u);
  EXPECT_EQ(back.eval[0].Checksum(), a2_->Checksum());
  // Flip one stored parameter: the manifest checksum no longer matches.
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().filename() == "manifest.json") continue;
    std::ifstream in(entry.path());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const size_t pos = text.find_first_of("123456789", text.find("\"data\""));
    ASSERT_NE(pos, std::string::npos);
    text[pos] = text[pos] == '9' ? '8' : static_cast<char>(text[pos] + 1);
    std::ofstream(entry.path()) << text;
    break;
  }
  EXPECT_THROW(LoadPool(dir), ConfigError);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(LoadPool(dir), ConfigError);
}

TEST(TeamsTest, UnknownFamilyIsConfigError) {
  EXPECT_THROW(ParseFamily("vdn"), ConfigError);
  EXPECT_THROW(PretrainTeam(static_cast<ConventionFamily>(17), 2, 1, TeamEnv(), Quick()),
               ConfigError);
  for (ConventionFamily f : kAllFamilies) EXPECT_EQ(ParseFamily(FamilyName(f)), f);
}

TEST(TeamsTest, FamiliesHaveDistinctRecipes) {
  std::set<std::map<std::string, double>> distinct;
  for (ConventionFamily f : kAllFamilies) distinct.insert(Hyperparameters(f));
  EXPECT_EQ(distinct.size(), 5u);
}

TEST(TeamsTest, FeaturesUseNearestTeammate) {
  EnvConfig env;
  env.grid_size = 5;
  env.n_agents = 3;
  PredatorPrey world(env);
  EnvState s;
  s.agents = {{0, 0}, {4, 4}, {1, 0}};
  s.prey = {2, 2};
  const auto obs = world.SetState(s);
  const int group[] = {0, 1};
  auto f = TeamFeatures(obs[0], 0, group, 0, 3);
  // Teammate is agent 1 even though agent 2 is closer.
  EXPECT_DOUBLE_EQ(f[4], 1.0);
  EXPECT_DOUBLE_EQ(f[5], 1.0);
  const int alone[] = {0};
  auto g = TeamFeatures(obs[0], 0, alone, 0, 3);
  EXPECT_DOUBLE_EQ(g[4], 0.25);
  EXPECT_DOUBLE_EQ(g[5], 0.0);
}

TEST(CompositionTest, ArithmeticOfSizes) {
  Rng rng(1);
  int seen = 0;
  for (int k = 0; k < 2000; ++k) {
    TeamComposition c = SampleComposition(5, 5, 2, rng);
    if (c.groups[0].members.size() == 2 && c.groups[1].members.size() == 2) {
      EXPECT_EQ(c.n_controlled(), 1);
      ++seen;
    }
  }
  EXPECT_GT(seen, 0);
}

TEST(CompositionTest, NoGroupsMeansAllControlled) {
  Rng rng(2);
  TeamComposition c = SampleComposition(0, 4, 0, rng);
  EXPECT_EQ(c.n_controlled(), 4);
  EXPECT_TRUE(c.groups.empty());
  EXPECT_EQ(c.GroupOf(), (std::vector<int>{0, 0, 0, 0}));
}

TEST(CompositionTest, PolicyFrequenciesAreUniform) {
  Rng rng(3);
  std::vector<int> counts(5, 0);
  for (int k = 0; k < 10000; ++k) ++counts[SampleComposition(5, 4, 1, rng).groups[0].policy_index];
  for (int c : counts) {
    EXPECT_GE(c / 10000.0, 0.18);
    EXPECT_LE(c / 10000.0, 0.22);
  }
}

TEST(CompositionTest, SizeTuplesAreUniformOverOrderedCompositions) {
  // n=5 split into (controlled, g1, g2) with all parts >= 1: C(4,2) = 6 tuples.
  Rng rng(4);
  std::map<std::vector<int>, int> counts;
  const int draws = 30000;
  for (int k = 0; k < draws; ++k) {
    TeamComposition c = SampleComposition(3, 5, 2, rng);
    ++counts[{c.n_controlled(), static_cast<int>(c.groups[0].members.size()),
              static_cast<int>(c.groups[1].members.size())}];
  }
  EXPECT_EQ(counts.size(), 6u);
  for (const auto& [sizes, n] : counts) EXPECT_NEAR(n / static_cast<double>(draws), 1.0 / 6, 0.012);
}

TEST(CompositionTest, SampledPartitionsAreValid) {
  Rng rng(5);
  for (int k = 0; k < 1000; ++k) {
    const int m = rng.UniformInt(5);
    const int n = m + 1 + rng.UniformInt(8);
    TeamComposition c = SampleComposition(5, n, m, rng);
    ASSERT_EQ(c.Validate(), "");
    std::vector<int> all = c.controlled;
    std::set<int> policies;
    for (const Group& g : c.groups) {
      EXPECT_FALSE(g.members.empty());
      all.insert(all.end(), g.members.begin(), g.members.end());
      policies.insert(g.policy_index);
    }
    EXPECT_EQ(static_cast<int>(policies.size()), m);
    std::sort(all.begin(), all.end());
    for (int i = 0; i < n; ++i) EXPECT_EQ(all[i], i);
    EXPECT_GE(c.n_controlled(), 1);
  }
}

TEST(CompositionTest, InfeasibleRequestsAreConfigErrors) {
  Rng rng(6);
  EXPECT_THROW(SampleComposition(2, 6, 3, rng), ConfigError);
  EXPECT_THROW(SampleComposition(5, 3, 3, rng), ConfigError);
}

TEST(CompositionTest, ValidateFlagsOverlap) {
  TeamComposition c;
  c.n_total = 3;
  c.controlled = {0, 1};
  c.groups = {Group{0, {1, 2}}};
  EXPECT_NE(c.Validate(), "");
  c.groups = {Group{0, {2}}};
  EXPECT_EQ(c.Validate(), "");
  c.groups = {Group{0, {}}};
  EXPECT_NE(c.Validate(), "");
}

}  // namespace
}  // namespace mars
