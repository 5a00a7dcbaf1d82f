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

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "mars/agent_model.h"
#include "mars/errors.h"
#include "mars/gradcheck.h"
#include "mars/layers.h"
#include "mars/rng.h"

namespace mars {
namespace {

AgentModelConfig SmallModel() {
  AgentModelConfig c;
  c.obs_dim = 5;
  c.hidden_dim = 6;
  c.embed_dim = 4;
  c.decoder_hidden = 7;
  return c;
}

Trajectory RandomTrajectory(int length, const AgentModelConfig& c, Rng& rng) {
  Trajectory t;
  for (int k = 0; k < length; ++k) {
    Observation o(c.obs_dim);
    for (double& v : o) v = rng.Uniform(-1, 1);
    t.Append(o, k == 0 ? -1 : rng.UniformInt(c.n_actions));
  }
  return t;
}

Observation RandomObs(const AgentModelConfig& c, Rng& rng) {
  Observation o(c.obs_dim);
  for (double& v : o) v = rng.Uniform(-1, 1);
  return o;
}

TEST(EncodeTest, Deterministic) {
  const AgentModelConfig c = SmallModel();
  const ParameterSet p = InitAgentModelParameters(c, 1);
  EXPECT_EQ(p, InitAgentModelParameters(c, 1));
  Rng rng(1);
  Trajectory t = RandomTrajectory(6, c, rng);
  EXPECT_EQ(Encode(t, p, c), Encode(t, p, c));
  EXPECT_EQ(Encode(t, p, c).size(), 4u);
}

TEST(EncodeTest, PrefixIsUnaffectedByLaterSteps) {
  const AgentModelConfig c = SmallModel();
  const ParameterSet p = InitAgentModelParameters(c, 2);
  Rng rng(2);
  Trajectory t = RandomTrajectory(8, c, rng);
  for (int k = 1; k <= 7; ++k) {
    const std::vector<double> before = Encode(t.Prefix(k), p, c);
    Trajectory longer = t.Prefix(k);
    longer.Append(RandomObs(c, rng), rng.UniformInt(5));
    EXPECT_EQ(Encode(longer.Prefix(k), p, c), before);
  }
}

TEST(EncodeTest, IncrementalEncoderMatchesFullPass) {
  const AgentModelConfig c = SmallModel();
  const ParameterSet p = InitAgentModelParameters(c, 3);
  Rng rng(3);
  Trajectory a = RandomTrajectory(5, c, rng), b = RandomTrajectory(5, c, rng);
  EncoderState enc(2, c.hidden_dim);
  for (int k = 0; k < 5; ++k) {
    Tensor in({2, c.InputDim()});
    FillStepInput(a.observations[k], a.prev_actions[k], c.n_actions, in.row(0));
    FillStepInput(b.observations[k], b.prev_actions[k], c.n_actions, in.row(1));
    Tensor e = enc.Step(in, p);
    const auto ea = Encode(a.Prefix(k + 1), p, c), eb = Encode(b.Prefix(k + 1), p, c);
    for (int j = 0; j < c.embed_dim; ++j) {
      EXPECT_NEAR(e.at(0, j), ea[j], 1e-12);
      EXPECT_NEAR(e.at(1, j), eb[j], 1e-12);
    }
  }
}

TEST(EncodeTest, DifferentFirstStepsGiveDifferentEmbeddings) {
  const AgentModelConfig c = SmallModel();
  const ParameterSet p = InitAgentModelParameters(c, 4);
  Rng rng(4);
  int collisions = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Trajectory a = RandomTrajectory(4, c, rng);
    Trajectory b = a;
    b.observations[0] = RandomObs(c, rng);
    collisions += Encode(a, p, c) == Encode(b, p, c);
  }
  EXPECT_EQ(collisions, 0);
}

TEST(EncodeTest, BadInputsRejected) {
  const AgentModelConfig c = SmallModel();
  const ParameterSet p = InitAgentModelParameters(c, 5);
  EXPECT_THROW(Encode(Trajectory{}, p, c), UsageError);
  Trajectory t;
  t.Append(Observation(c.obs_dim + 1, 0.0), -1);
  EXPECT_THROW(Encode(t, p, c), ConfigError);
}

TEST(DecodeTest, SoftmaxSumsToOneAndShapes) {
  const AgentModelConfig c = SmallModel();
  const ParameterSet p = InitAgentModelParameters(c, 6);
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> e(c.embed_dim);
    for (double& v : e) v = rng.Uniform(-2, 2);
    Decoded d = Decode(e, p, c);
    EXPECT_EQ(d.observation.size(), static_cast<size_t>(c.obs_dim));
    ASSERT_EQ(d.action_logits.size(), static_cast<size_t>(c.n_actions));
    double s = 0.0;
    for (double q : Softmax(d.action_logits)) s += q;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_THROW(Decode(std::vector<double>(c.embed_dim + 1), p, c), ConfigError);
}

TEST(DecodeTest, ZeroWeightsGiveBias) {
  const AgentModelConfig c = SmallModel();
  ParameterSet p = InitAgentModelParameters(c, 7);
  for (auto& [id, t] : p.mutable_entries()) {
    if (id.rfind("dec_obs", 0) == 0 && id.back() == 'w') std::fill(t.values().begin(), t.values().end(), 0.0);
  }
  const Tensor& bias = p.Get("dec_obs.1.b");
  Rng rng(7);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> e(c.embed_dim);
    for (double& v : e) v = rng.Uniform(-2, 2);
    EXPECT_EQ(Decode(e, p, c).observation, bias.values());
  }
}

// Parameters whose decoders ignore the embedding: observation output is
// `obs`, action logits are `logits`.
ParameterSet FixedDecoder(const AgentModelConfig& c, const std::vector<double>& obs,
                          const std::vector<double>& logits) {
  ParameterSet p = InitAgentModelParameters(c, 8);
  for (auto& [id, t] : p.mutable_entries()) {
    if (id.rfind("dec_", 0) == 0) std::fill(t.values().begin(), t.values().end(), 0.0);
  }
  p.GetMutable("dec_obs.1.b").values() = obs;
  p.GetMutable("dec_act.1.b").values() = logits;
  return p;
}

TEST(EdLossTest, PerfectPredictionIsZero) {
  const AgentModelConfig c = SmallModel();
  Rng rng(8);
  Trajectory t = RandomTrajectory(3, c, rng);
  Observation target = RandomObs(c, rng);
  const ParameterSet p = FixedDecoder(c, target, {0, 0, 800, 0, 0});
  const int action[] = {2};
  EdLossValue v = EdLoss(t, target, action, p, c);
  EXPECT_EQ(v.reconstruction, 0.0);
  EXPECT_EQ(v.action, 0.0);
  EXPECT_EQ(v.total, 0.0);
}

TEST(EdLossTest, UniformLogitsGiveLogFive) {
  const AgentModelConfig c = SmallModel();
  Rng rng(9);
  Trajectory t = RandomTrajectory(3, c, rng);
  Observation target = RandomObs(c, rng);
  std::vector<double> off = target;
  off[0] += 0.5;
  off[3] -= 1.0;
  const ParameterSet p = FixedDecoder(c, off, {0.3, 0.3, 0.3, 0.3, 0.3});
  for (int a = 0; a < 5; ++a) {
    const int action[] = {a};
    EdLossValue v = EdLoss(t, target, action, p, c);
    EXPECT_NEAR(v.action, std::log(5.0), 1e-12);
    EXPECT_NEAR(v.reconstruction, 1.25, 1e-12);
    EXPECT_NEAR(v.total, 1.25 + std::log(5.0), 1e-12);
  }
}

TEST(EdLossTest, ActionOutOfRangeIsUsageError) {
  const AgentModelConfig c = SmallModel();
  const ParameterSet p = InitAgentModelParameters(c, 10);
  Rng rng(10);
  Trajectory t = RandomTrajectory(2, c, rng);
  Observation o = RandomObs(c, rng);
  const int bad[] = {5};
  const int negative[] = {-1};
  EXPECT_THROW(EdLoss(t, o, bad, p, c), UsageError);
  EXPECT_THROW(EdLoss(t, o, negative, p, c), UsageError);
}

TEST(EdLossTest, BoundedBelowByBestActionProbability) {
  const AgentModelConfig c = SmallModel();
  const ParameterSet p = InitAgentModelParameters(c, 11);
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Trajectory t = RandomTrajectory(1 + rng.UniformInt(5), c, rng);
    Observation o = RandomObs(c, rng);
    const int action[] = {rng.UniformInt(5)};
    EdLossValue v = EdLoss(t, o, action, p, c);
    const auto logits = Decode(Encode(t, p, c), p, c).action_logits;
    double pmax = 0.0;
    for (double q : Softmax(logits)) pmax = std::max(pmax, q);
    EXPECT_GE(v.reconstruction, 0.0);
    EXPECT_GE(v.total, -std::log(pmax) - 1e-12);
  }
}

std::vector<LabeledSequence> RandomSequences(const AgentModelConfig& c, Rng& rng) {
  std::vector<LabeledSequence> out;
  for (int s = 0; s < 3; ++s) {
    LabeledSequence seq;
    seq.trajectory = RandomTrajectory(2 + s, c, rng);
    for (int k = 0; k < seq.trajectory.length(); ++k) seq.action_targets.push_back({rng.UniformInt(5)});
    out.push_back(seq);
  }
  return out;
}

TEST(EdLossTest, BatchedLossIsMeanOfPerStepLosses) {
  const AgentModelConfig c = SmallModel();
  const ParameterSet p = InitAgentModelParameters(c, 12);
  Rng rng(12);
  const auto seqs = RandomSequences(c, rng);
  double sum = 0.0, recon = 0.0;
  int steps = 0;
  for (const auto& s : seqs) {
    for (int k = 1; k <= s.trajectory.length(); ++k) {
      EdLossValue v = EdLoss(s.trajectory.Prefix(k), s.trajectory.observations[k - 1],
                             s.action_targets[k - 1], p, c);
      sum += v.total;
      recon += v.reconstruction;
      ++steps;
    }
  }
  Tape tape(false);
  EdLossVars vars = EdLossSequences(tape, MakeSequenceBatch(seqs, c), p, c);
  EXPECT_NEAR(tape.scalar(vars.total), sum / steps, 1e-12);
  EXPECT_NEAR(vars.reconstruction, recon / steps, 1e-12);
  EXPECT_EQ(vars.steps, steps);
}

TEST(EdLossTest, GradientsMatchFiniteDifferences) {
  AgentModelConfig c = SmallModel();
  for (TargetMode mode : {TargetMode::kOwnAction, TargetMode::kTeammateActions}) {
    c.target_mode = mode;
    c.n_agents = 3;
    ParameterSet p = InitAgentModelParameters(c, 13);
    Rng rng(13);
    std::vector<LabeledSequence> seqs;
    for (int s = 0; s < 2; ++s) {
      LabeledSequence seq;
      seq.trajectory = RandomTrajectory(3 + s, c, rng);
      for (int k = 0; k < seq.trajectory.length(); ++k) {
        std::vector<int> targets(c.NumActionTargets());
        for (int& a : targets) a = rng.UniformInt(5);
        seq.action_targets.push_back(targets);
      }
      seqs.push_back(seq);
    }
    const SequenceBatch batch = MakeSequenceBatch(seqs, c);
    ParameterSet* sets[] = {&p};
    const std::string names[] = {"agent_model"};
    auto entries = CompareWithFiniteDifferences(
        sets, names, [&](Tape& tape) { return EdLossSequences(tape, batch, p, c).total; });
    for (const auto& e : entries) EXPECT_LT(e.max_rel_error, 1e-4) << e.parameter;
  }
}

TEST(EdTrainTest, FitsFixedDataset) {
  const AgentModelConfig c = SmallModel();
  ParameterSet p = InitAgentModelParameters(c, 14);
  Rng rng(14);
  const SequenceBatch batch = MakeSequenceBatch(RandomSequences(c, rng), c);
  Adam adam;
  const double first = EdTrainStep(p, adam, batch, c, 1e-2, 10.0).total;
  double last = first;
  for (int k = 0; k < 300; ++k) last = EdTrainStep(p, adam, batch, c, 1e-2, 10.0).total;
  EXPECT_LT(last, 0.5 * first);
}

}  // namespace
}  // namespace mars
