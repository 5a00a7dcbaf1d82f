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

#include "mars/teams.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "mars/errors.h"
#include "mars/layers.h"
#include "mars/optim.h"
#include "mars/tape.h"

namespace mars {
namespace {

using Features = std::array<double, kTeamFeatureDim>;

constexpr int kQLayers = 3;

struct FamilyInfo {
  ConventionFamily family;
  const char* name;
};

constexpr std::array<FamilyInfo, 5> kFamilyNames = {{
    {ConventionFamily::kEpsLinear, "iql-eps-linear"},
    {ConventionFamily::kApproachBonus, "iql-approach-bonus"},
    {ConventionFamily::kSpreadBonus, "iql-spread-bonus"},
    {ConventionFamily::kBoltzmannCluster, "iql-boltzmann-cluster"},
    {ConventionFamily::kShortHorizon, "iql-short-horizon"},
}};

Tensor FeatureMatrix(std::span<const Features> rows) {
  Tensor x({static_cast<int>(rows.size()), kTeamFeatureDim});
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), x.row(static_cast<int>(i)).begin());
  }
  return x;
}

Tensor QValues(const ParameterSet& q, std::span<const Features> rows) {
  Tape tape(false);
  return tape.value(Mlp(tape, tape.Constant(FeatureMatrix(rows)), q, "q", kQLayers));
}

int ArgMax(std::span<const double> v) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(v.size()); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

int SampleSoftmax(std::span<const double> values, double temperature, Rng& rng) {
  std::vector<double> scaled(values.begin(), values.end());
  for (double& s : scaled) s /= temperature;
  return rng.Categorical(Softmax(scaled));
}

int ManhattanCells(double dr, double dc, double scale) {
  return static_cast<int>(std::lround(std::abs(dr) * scale + std::abs(dc) * scale));
}

struct Transition {
  Features features;
  int unit = 0;
  double reward = 0.0;
  Features next;
  bool done = false;
};

double Schedule(const FamilyRecipe& r, int step, int budget) {
  const double horizon = std::max(1.0, r.decay_fraction * budget);
  const double frac = std::min(1.0, step / horizon);
  return r.eps_start + (r.eps_end - r.eps_start) * frac;
}

}  // namespace

std::string FamilyName(ConventionFamily f) {
  for (const auto& info : kFamilyNames) {
    if (info.family == f) return info.name;
  }
  throw ConfigError("unknown convention family");
}

ConventionFamily ParseFamily(const std::string& name) {
  for (const auto& info : kFamilyNames) {
    if (name == info.name) return info.family;
  }
  throw ConfigError("unknown convention family '" + name + "'");
}

FamilyRecipe RecipeFor(ConventionFamily f) {
  FamilyRecipe r;
  switch (f) {
    case ConventionFamily::kEpsLinear:
      r.eps_start = 0.6;
      r.eps_end = 0.05;
      r.decay_fraction = 0.3;
      r.approach_bonus = 0.05;
      r.gamma = 0.9;
      r.width = 32;
      r.action_order = {kUp, kDown, kLeft, kRight, kStay};
      break;
    case ConventionFamily::kApproachBonus:
      r.eps_start = 1.0;
      r.eps_end = 0.1;
      r.decay_fraction = 0.2;
      r.approach_bonus = 0.05;
      r.gamma = 0.9;
      r.width = 24;
      r.action_order = {kRight, kLeft, kDown, kUp, kStay};
      break;
    case ConventionFamily::kSpreadBonus:
      r.eps_start = 0.5;
      r.eps_end = 0.05;
      r.decay_fraction = 0.3;
      r.approach_bonus = 0.06;
      r.spread_bonus = 0.01;
      r.gamma = 0.92;
      r.width = 32;
      r.action_order = {kLeft, kUp, kRight, kDown, kStay};
      break;
    case ConventionFamily::kBoltzmannCluster:
      r.boltzmann = true;
      r.eps_start = 0.3;
      r.eps_end = 0.01;
      r.decay_fraction = 0.4;
      r.approach_bonus = 0.05;
      r.spread_bonus = -0.02;
      r.gamma = 0.93;
      r.width = 32;
      r.action_order = {kDown, kUp, kRight, kLeft, kStay};
      break;
    case ConventionFamily::kShortHorizon:
      r.eps_start = 0.5;
      r.eps_end = 0.02;
      r.decay_fraction = 0.3;
      r.approach_bonus = 0.03;
      r.gamma = 0.8;
      r.width = 16;
      r.action_order = {kStay, kLeft, kRight, kUp, kDown};
      break;
    default:
      throw ConfigError("unknown convention family");
  }
  return r;
}

std::map<std::string, double> Hyperparameters(ConventionFamily f) {
  const FamilyRecipe r = RecipeFor(f);
  std::map<std::string, double> h = {
      {"eps_start", r.eps_start},       {"eps_end", r.eps_end},
      {"decay_fraction", r.decay_fraction},
      {"boltzmann", r.boltzmann ? 1.0 : 0.0},
      {"approach_bonus", r.approach_bonus},
      {"spread_bonus", r.spread_bonus}, {"gamma", r.gamma},
      {"width", static_cast<double>(r.width)},
      {"learning_rate", r.learning_rate},
      {"target_sync", static_cast<double>(r.target_sync)},
  };
  for (int k = 0; k < kNumActions; ++k) {
    h["action_order_" + std::to_string(k)] = r.action_order[k];
  }
  return h;
}

Features TeamFeatures(std::span<const double> obs, int self_id,
                      std::span<const int> member_ids, int rank, int n_agents) {
  if (n_agents < 1 || static_cast<int>(obs.size()) != 5 + 2 * (n_agents - 1)) {
    throw UsageError("team features: observation width does not match agent count");
  }
  if (self_id < 0 || self_id >= n_agents) throw UsageError("team features: bad agent id");
  const int size = static_cast<int>(member_ids.size());
  if (rank < 0 || rank >= size) throw UsageError("team features: rank out of range");
  Features f{};
  f[0] = obs[0];
  f[1] = obs[1];
  f[2] = obs[2];
  f[3] = obs[3];
  std::vector<int> all;
  if (size == 1) {
    for (int j = 0; j < n_agents; ++j) all.push_back(j);
    member_ids = all;
  }
  double best = std::numeric_limits<double>::infinity();
  for (int id : member_ids) {
    if (id == self_id) continue;
    if (id < 0 || id >= n_agents) throw UsageError("team features: bad member id");
    const int slot = 4 + 2 * (id < self_id ? id : id - 1);
    const double d = std::abs(obs[slot]) + std::abs(obs[slot + 1]);
    if (d < best) {
      best = d;
      f[4] = obs[slot];
      f[5] = obs[slot + 1];
    }
  }
  f[6] = size > 1 ? static_cast<double>(rank) / (size - 1) : 0.0;
  f[7] = obs.back();
  return f;
}

std::array<double, kNumActions> TeamPolicy::ActionValues(const Features& features) const {
  const Tensor q_units = QValues(q, std::span(&features, 1));
  const FamilyRecipe r = RecipeFor(family);
  std::array<double, kNumActions> out{};
  for (int k = 0; k < kNumActions; ++k) out[r.action_order[k]] = q_units[k];
  return out;
}

int TeamPolicy::GreedyAction(const Features& features) const {
  const Tensor q_units = QValues(q, std::span(&features, 1));
  return RecipeFor(family).action_order[ArgMax(q_units.values())];
}

std::vector<int> ActUncontrolled(const TeamPolicy& policy, std::span<const int> member_ids,
                                 std::span<const Observation> member_obs, int n_agents,
                                 ActMode mode, double temperature, Rng* rng) {
  if (member_ids.size() != member_obs.size()) {
    throw UsageError("act_uncontrolled: " + std::to_string(member_obs.size()) +
                     " observations for " + std::to_string(member_ids.size()) + " agents");
  }
  if (member_ids.empty()) return {};
  if (mode == ActMode::kStochastic && (rng == nullptr || temperature <= 0.0)) {
    throw UsageError("act_uncontrolled: stochastic mode needs an rng and temperature > 0");
  }
  std::vector<Features> rows;
  rows.reserve(member_ids.size());
  for (size_t k = 0; k < member_ids.size(); ++k) {
    rows.push_back(TeamFeatures(member_obs[k], member_ids[k], member_ids,
                                static_cast<int>(k), n_agents));
  }
  const Tensor q_units = QValues(policy.q, rows);
  const FamilyRecipe r = RecipeFor(policy.family);
  std::vector<int> actions;
  actions.reserve(rows.size());
  for (int k = 0; k < static_cast<int>(rows.size()); ++k) {
    const int unit = mode == ActMode::kGreedy
                         ? ArgMax(q_units.row(k))
                         : SampleSoftmax(q_units.row(k), temperature, *rng);
    actions.push_back(r.action_order[unit]);
  }
  return actions;
}

TeamPolicy PretrainTeam(ConventionFamily family, int size, uint64_t seed,
                        const EnvConfig& env_config, const PretrainOptions& options) {
  if (size < 1) throw ConfigError("team size must be >= 1");
  if (options.budget_steps < 0 || options.batch_size < 1 || options.replay_capacity < 1) {
    throw ConfigError("invalid pretraining options");
  }
  const FamilyRecipe recipe = RecipeFor(family);
  const uint64_t fam = static_cast<uint64_t>(family);
  EnvConfig cfg = env_config;
  cfg.n_agents = size;
  cfg.capture_threshold = std::min(cfg.capture_threshold, size);
  cfg.Validate();
  const double scale = std::max(1, cfg.grid_size - 1);

  TeamPolicy policy;
  TeamPolicy best;
  best.self_play_return = -std::numeric_limits<double>::infinity();
  policy.family = family;
  policy.seed = seed;
  policy.group_size = size;
  policy.q = ParameterSet(seed);
  {
    Rng init(DeriveSeed(seed, {fam, static_cast<uint64_t>(size), 1}));
    const std::array<int, 4> sizes = {kTeamFeatureDim, recipe.width, recipe.width,
                                      kNumActions};
    InitMlp(policy.q, "q", sizes, init);
  }
  ParameterSet target = policy.q;
  Adam adam;
  Rng rng(DeriveSeed(seed, {fam, static_cast<uint64_t>(size), 3}));
  std::vector<Transition> replay;
  replay.reserve(std::min(options.replay_capacity, options.budget_steps * size + 1));
  size_t cursor = 0;

  std::vector<int> ids(size);
  for (int i = 0; i < size; ++i) ids[i] = i;
  PredatorPrey env(cfg);
  int episode = 0;
  std::vector<Observation> obs;
  bool need_reset = true;

  auto features_of = [&](const std::vector<Observation>& o) {
    std::vector<Features> f;
    for (int i = 0; i < size; ++i) f.push_back(TeamFeatures(o[i], i, ids, i, size));
    return f;
  };
  auto mate_distance = [&](const Features& f) {
    return size > 1 ? ManhattanCells(f[4], f[5], scale) : 0;
  };

  for (int step = 0; step < options.budget_steps; ++step) {
    if (need_reset) {
      obs = env.Reset(DeriveSeed(seed, {fam, static_cast<uint64_t>(size), 2,
                                        static_cast<uint64_t>(episode++)}));
      need_reset = false;
    }
    const std::vector<Features> f = features_of(obs);
    const Tensor q_units = QValues(policy.q, f);
    const double explore = Schedule(recipe, step, options.budget_steps);
    std::vector<int> units(size), actions(size);
    for (int i = 0; i < size; ++i) {
      if (recipe.boltzmann) {
        units[i] = SampleSoftmax(q_units.row(i), std::max(explore, 1e-3), rng);
      } else if (rng.Uniform() < explore) {
        units[i] = rng.UniformInt(kNumActions);
      } else {
        units[i] = ArgMax(q_units.row(i));
      }
      actions[i] = recipe.action_order[units[i]];
    }
    StepResult res = env.Step(actions);
    const std::vector<Features> next = features_of(res.observations);
    for (int i = 0; i < size; ++i) {
      double r = res.reward;
      r += recipe.approach_bonus * (ManhattanCells(f[i][2], f[i][3], scale) -
                                    ManhattanCells(next[i][2], next[i][3], scale));
      r += recipe.spread_bonus * (mate_distance(next[i]) - mate_distance(f[i]));
      Transition tr{f[i], units[i], r, next[i], res.done};
      if (static_cast<int>(replay.size()) < options.replay_capacity) {
        replay.push_back(tr);
      } else {
        replay[cursor] = tr;
        cursor = (cursor + 1) % replay.size();
      }
    }
    obs = std::move(res.observations);
    need_reset = res.done;

    if (step >= options.warmup_steps) {
      std::vector<const Transition*> batch;
      std::vector<Features> xs, ys;
      std::vector<int> picked;
      for (int b = 0; b < options.batch_size; ++b) {
        batch.push_back(&replay[rng.UniformInt(static_cast<int>(replay.size()))]);
        xs.push_back(batch.back()->features);
        ys.push_back(batch.back()->next);
        picked.push_back(batch.back()->unit);
      }
      const Tensor q_next = QValues(target, ys);
      Tensor y({options.batch_size, 1});
      for (int b = 0; b < options.batch_size; ++b) {
        const double boot = batch[b]->done
                                ? 0.0
                                : *std::max_element(q_next.row(b).begin(), q_next.row(b).end());
        y[b] = batch[b]->reward + recipe.gamma * boot;
      }
      Tape tape;
      Var q = tape.Pick(Mlp(tape, tape.Constant(FeatureMatrix(xs)), policy.q, "q", kQLayers),
                        std::move(picked));
      tape.Backward(tape.Mean(tape.Square(tape.Sub(q, tape.Constant(std::move(y))))));
      Gradients grads = tape.GradientsFor(policy.q);
      Gradients* gp = &grads;
      ClipGlobalNorm(std::span(&gp, 1), 10.0);
      adam.Step("q", policy.q, grads, recipe.learning_rate);
    }
    if ((step + 1) % recipe.target_sync == 0) target = policy.q;
    if (options.eval_interval > 0 &&
        ((step + 1) % options.eval_interval == 0 || step + 1 == options.budget_steps)) {
      policy.self_play_return = SelfPlayReturn(policy, cfg, options.eval_episodes,
                                               DeriveSeed(seed, {fam, 4}));
      if (policy.self_play_return > best.self_play_return) best = policy;
    }
  }
  if (options.eval_interval <= 0 || options.budget_steps == 0) {
    policy.self_play_return = SelfPlayReturn(policy, cfg, options.eval_episodes,
                                             DeriveSeed(seed, {fam, 4}));
    return policy;
  }
  return best;
}

double SelfPlayReturn(const TeamPolicy& policy, const EnvConfig& env, int episodes,
                      uint64_t seed) {
  if (episodes < 1) throw UsageError("self-play evaluation needs >= 1 episode");
  EnvConfig cfg = env;
  cfg.n_agents = policy.group_size;
  cfg.capture_threshold = std::min(cfg.capture_threshold, policy.group_size);
  PredatorPrey e(cfg);
  std::vector<int> ids(policy.group_size);
  for (int i = 0; i < policy.group_size; ++i) ids[i] = i;
  double total = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    std::vector<Observation> obs = e.Reset(DeriveSeed(seed, {static_cast<uint64_t>(ep)}));
    bool done = false;
    while (!done) {
      StepResult r = e.Step(ActUncontrolled(policy, ids, obs, cfg.n_agents));
      total += r.reward;
      done = r.done;
      obs = std::move(r.observations);
    }
  }
  return total / episodes;
}

double DisagreementRate(const TeamPolicy& a, const TeamPolicy& b,
                        std::span<const Features> probes) {
  if (probes.empty()) throw UsageError("disagreement rate: no probes");
  int differ = 0;
  for (const Features& f : probes) differ += a.GreedyAction(f) != b.GreedyAction(f);
  return static_cast<double>(differ) / probes.size();
}

std::vector<Features> SampleProbeFeatures(int count, int grid_size, Rng& rng) {
  const double scale = std::max(1, grid_size - 1);
  std::vector<Features> out;
  for (int k = 0; k < count; ++k) {
    const int r = rng.UniformInt(grid_size), c = rng.UniformInt(grid_size);
    const int pr = rng.UniformInt(grid_size), pc = rng.UniformInt(grid_size);
    const int mr = rng.UniformInt(grid_size), mc = rng.UniformInt(grid_size);
    out.push_back({r / scale, c / scale, (pr - r) / scale, (pc - c) / scale,
                   (mr - r) / scale, (mc - c) / scale,
                   static_cast<double>(rng.UniformInt(2)), rng.Uniform()});
  }
  return out;
}

TeamPool PretrainPool(const PoolSpec& spec, const EnvConfig& env) {
  for (uint64_t s : spec.eval_seeds) {
    if (std::find(spec.train_seeds.begin(), spec.train_seeds.end(), s) !=
        spec.train_seeds.end()) {
      throw ConfigError("pool eval seeds must be disjoint from train seeds");
    }
  }
  if (spec.families.empty()) throw ConfigError("pool needs at least one family");
  TeamPool pool;
  for (ConventionFamily f : spec.families) {
    for (uint64_t s : spec.train_seeds) {
      pool.train.push_back(PretrainTeam(f, spec.group_size, s, env, spec.pretrain));
    }
    for (uint64_t s : spec.eval_seeds) {
      pool.eval.push_back(PretrainTeam(f, spec.group_size, s, env, spec.pretrain));
    }
  }
  return pool;
}

namespace {

std::string PolicyFile(const TeamPolicy& p, const std::string& split, int index) {
  return split + "-" + std::to_string(index) + "-" + FamilyName(p.family) + "-seed" +
         std::to_string(p.seed) + ".json";
}

void WriteJson(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump() << "\n";
}

nlohmann::json ReadJson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed json in " + path.string() + ": " + e.what());
  }
}

}  // namespace

void SavePool(const TeamPool& pool, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json entries = nlohmann::json::array();
  auto save_split = [&](const std::vector<TeamPolicy>& policies, const std::string& split) {
    for (int k = 0; k < static_cast<int>(policies.size()); ++k) {
      const TeamPolicy& p = policies[k];
      const std::string file = PolicyFile(p, split, k);
      WriteJson(dir / file, {{"family", FamilyName(p.family)},
                             {"seed", p.seed},
                             {"size", p.group_size},
                             {"self_play_return", p.self_play_return},
                             {"params", p.q.ToJson()}});
      entries.push_back({{"family", FamilyName(p.family)},
                         {"seed", p.seed},
                         {"size", p.group_size},
                         {"split", split},
                         {"self_play_return", p.self_play_return},
                         {"file", file},
                         {"checksum", ChecksumHex(p.Checksum())}});
    }
  };
  save_split(pool.train, "train");
  save_split(pool.eval, "eval");
  WriteJson(dir / "manifest.json", {{"schema_version", 1}, {"entries", entries}});
}

TeamPool LoadPool(const std::filesystem::path& dir) {
  const nlohmann::json manifest = ReadJson(dir / "manifest.json");
  TeamPool pool;
  try {
    for (const auto& e : manifest.at("entries")) {
      const std::string file = e.at("file").get<std::string>();
      const nlohmann::json j = ReadJson(dir / file);
      TeamPolicy p;
      p.family = ParseFamily(j.at("family").get<std::string>());
      p.seed = j.at("seed").get<uint64_t>();
      p.group_size = j.at("size").get<int>();
      p.self_play_return = j.at("self_play_return").get<double>();
      p.q = ParameterSet::FromJson(j.at("params"));
      if (ChecksumHex(p.Checksum()) != e.at("checksum").get<std::string>()) {
        throw ConfigError("checksum mismatch for pool entry " + file);
      }
      const std::string split = e.at("split").get<std::string>();
      if (split == "train") {
        pool.train.push_back(std::move(p));
      } else if (split == "eval") {
        pool.eval.push_back(std::move(p));
      } else {
        throw ConfigError("unknown pool split '" + split + "'");
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed pool manifest: ") + ex.what());
  }
  return pool;
}

std::vector<int> TeamComposition::GroupOf() const {
  std::vector<int> g(n_total, -1);
  for (int a : controlled) g.at(a) = 0;
  for (size_t k = 0; k < groups.size(); ++k) {
    for (int a : groups[k].members) g.at(a) = static_cast<int>(k) + 1;
  }
  return g;
}

std::string TeamComposition::Validate() const {
  if (controlled.empty()) return "no controlled agents";
  std::vector<int> seen(n_total, 0);
  auto mark = [&](int a) {
    if (a < 0 || a >= n_total) return false;
    return ++seen[a] == 1;
  };
  for (int a : controlled) {
    if (!mark(a)) return "controlled agent " + std::to_string(a) + " invalid or repeated";
  }
  for (const Group& g : groups) {
    if (g.members.empty()) return "empty uncontrolled group";
    for (int a : g.members) {
      if (!mark(a)) return "agent " + std::to_string(a) + " invalid or repeated";
    }
  }
  for (int a = 0; a < n_total; ++a) {
    if (!seen[a]) return "agent " + std::to_string(a) + " unassigned";
  }
  return "";
}

TeamComposition SampleComposition(int pool_size, int n_total, int m_groups, Rng& rng) {
  if (m_groups < 0) throw ConfigError("number of groups must be >= 0");
  if (pool_size < m_groups) {
    throw ConfigError("pool has " + std::to_string(pool_size) + " policies, need " +
                      std::to_string(m_groups) + " distinct");
  }
  if (n_total < m_groups + 1) {
    throw ConfigError("n_total " + std::to_string(n_total) + " cannot hold " +
                      std::to_string(m_groups) + " groups and a controlled agent");
  }
  std::vector<int> policies(pool_size);
  for (int k = 0; k < pool_size; ++k) policies[k] = k;
  for (int k = 0; k < m_groups; ++k) {
    std::swap(policies[k], policies[k + rng.UniformInt(pool_size - k)]);
  }
  std::vector<int> cuts(n_total - 1);
  for (int k = 0; k < n_total - 1; ++k) cuts[k] = k + 1;
  for (int k = 0; k < m_groups; ++k) {
    std::swap(cuts[k], cuts[k + rng.UniformInt(n_total - 1 - k)]);
  }
  std::vector<int> chosen(cuts.begin(), cuts.begin() + m_groups);
  std::sort(chosen.begin(), chosen.end());
  std::vector<int> ids(n_total);
  for (int k = 0; k < n_total; ++k) ids[k] = k;
  rng.Shuffle(ids);

  TeamComposition c;
  c.n_total = n_total;
  int begin = 0;
  for (int k = 0; k < m_groups; ++k) {
    Group g;
    g.policy_index = policies[k];
    g.members.assign(ids.begin() + begin, ids.begin() + chosen[k]);
    std::sort(g.members.begin(), g.members.end());
    c.groups.push_back(std::move(g));
    begin = chosen[k];
  }
  c.controlled.assign(ids.begin() + begin, ids.end());
  std::sort(c.controlled.begin(), c.controlled.end());
  return c;
}

}  // namespace mars
