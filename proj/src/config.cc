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

#include "mars/config.h"

#include <cmath>
#include <fstream>

#include "mars/errors.h"

namespace mars {
namespace {

using nlohmann::json;

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

bool SameKind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) {
    if (a.is_number_float()) return true;
    return !b.is_number_float() || std::floor(b.get<double>()) == b.get<double>();
  }
  return a.type() == b.type();
}

void MergeStrict(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("config section '" + path + "' must be an object");
  for (const auto& [key, value] : user.items()) {
    const std::string at = Join(path, key);
    if (!base.contains(key)) throw ConfigError("unknown config key '" + at + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      MergeStrict(slot, value, at);
    } else if (!SameKind(slot, value)) {
      throw ConfigError("config key '" + at + "' has the wrong type");
    } else {
      slot = value.is_number_float() && slot.is_number_integer()
                 ? json(static_cast<int64_t>(value.get<double>()))
                 : value;
    }
  }
}

template <typename T>
T Read(const json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + std::string(section) + "." + key + "' is invalid");
  }
}

std::string ActModeName(ActMode m) {
  return m == ActMode::kGreedy ? "greedy" : "stochastic";
}

ActMode ParseActMode(const std::string& s) {
  if (s == "greedy") return ActMode::kGreedy;
  if (s == "stochastic") return ActMode::kStochastic;
  throw ConfigError("unknown teams.act_mode '" + s + "'");
}

json Defaults() { return ExperimentConfig{}.ToJson(); }

}  // namespace

void ExperimentConfig::Validate() const {
  env.Validate();
  if (teams.m_groups < 0) throw ConfigError("teams.m_groups must be >= 0");
  if (env.n_agents < teams.m_groups + 1) {
    throw ConfigError("env.n_agents must be >= teams.m_groups + 1");
  }
  if (teams.temperature <= 0.0) throw ConfigError("teams.temperature must be > 0");
  if (teams.pool.group_size < 1) throw ConfigError("teams.group_size must be >= 1");
  if (teams.pool.families.empty()) throw ConfigError("teams.families must not be empty");
  for (uint64_t s : teams.pool.eval_seeds) {
    for (uint64_t t : teams.pool.train_seeds) {
      if (s == t) throw ConfigError("teams.eval_seeds must be disjoint from teams.train_seeds");
    }
  }
  const size_t pool_size = teams.pool.families.size() * teams.pool.train_seeds.size();
  if (pool_size < static_cast<size_t>(teams.m_groups)) {
    throw ConfigError("teams.m_groups exceeds the number of train pool policies");
  }
  const size_t eval_pool_size = teams.pool.families.size() * teams.pool.eval_seeds.size();
  if (eval.use_eval_pool && eval_pool_size < static_cast<size_t>(teams.m_groups)) {
    throw ConfigError("teams.m_groups exceeds the number of eval pool policies");
  }
  if (representatives < 1) throw ConfigError("rfm.representatives must be >= 1");
  if (train.total_env_steps < 0) throw ConfigError("train.total_env_steps must be >= 0");
  if (train.episodes_per_iter < 1) throw ConfigError("train.episodes_per_iter must be >= 1");
  if (train.ed_epochs < 0) throw ConfigError("train.ed_epochs must be >= 0");
  if (train.eval_interval < 0) throw ConfigError("train.eval_interval must be >= 0");
  if (train.checkpoint_interval < 0) {
    throw ConfigError("train.checkpoint_interval must be >= 0");
  }
  if (train.workers < 1) throw ConfigError("train.workers must be >= 1");
  if (eval.episodes < 0) throw ConfigError("eval.episodes must be >= 0");
  if (variant == Variant::kNaiveMarl && teams.pool.train_seeds.empty()) {
    throw ConfigError("NAIVE_MARL needs a train pool");
  }
  MakeModelSpec().Validate();
}

ModelSpec ExperimentConfig::MakeModelSpec() const {
  ModelSpec s;
  s.variant = variant;
  s.obs_dim = env.ObservationDim();
  s.n_actions = kNumActions;
  s.agent_model = agent_model;
  s.agent_model.obs_dim = s.obs_dim;
  s.agent_model.n_actions = kNumActions;
  s.agent_model.n_agents = env.n_agents;
  s.rfm = rfm;
  s.policy = policy;
  return s;
}

json ExperimentConfig::ToJson() const {
  json families = json::array();
  for (ConventionFamily f : teams.pool.families) families.push_back(FamilyName(f));
  return {
      {"schema_version", kConfigSchemaVersion},
      {"variant", VariantName(variant)},
      {"seed", seed},
      {"env",
       {{"grid_size", env.grid_size},
        {"n_agents", env.n_agents},
        {"episode_limit", env.episode_limit},
        {"prey_policy_seed", env.prey_policy_seed},
        {"reward_capture", env.reward_capture},
        {"step_cost", env.step_cost},
        {"capture_threshold", env.capture_threshold},
        {"capture_terminal", env.capture_terminal},
        {"prey_policy", PreyPolicyName(env.prey_policy)},
        {"prey_move_prob", env.prey_move_prob}}},
      {"teams",
       {{"pool_dir", teams.pool_dir},
        {"families", families},
        {"train_seeds", teams.pool.train_seeds},
        {"eval_seeds", teams.pool.eval_seeds},
        {"group_size", teams.pool.group_size},
        {"pretrain_steps", teams.pool.pretrain.budget_steps},
        {"pretrain_batch_size", teams.pool.pretrain.batch_size},
        {"replay_capacity", teams.pool.pretrain.replay_capacity},
        {"warmup_steps", teams.pool.pretrain.warmup_steps},
        {"pretrain_eval_interval", teams.pool.pretrain.eval_interval},
        {"pretrain_eval_episodes", teams.pool.pretrain.eval_episodes},
        {"m_groups", teams.m_groups},
        {"act_mode", ActModeName(teams.act_mode)},
        {"temperature", teams.temperature}}},
      {"agent_model",
       {{"hidden_dim", agent_model.hidden_dim},
        {"embed_dim", agent_model.embed_dim},
        {"decoder_hidden", agent_model.decoder_hidden},
        {"target_mode", TargetModeName(agent_model.target_mode)}}},
      {"rfm",
       {{"node_dim", rfm.node_dim},
        {"edge_dim", rfm.edge_dim},
        {"global_dim", rfm.global_dim},
        {"hidden_dim", rfm.hidden_dim},
        {"rounds", rfm.rounds},
        {"global_feedback", rfm.global_feedback},
        {"representatives", representatives}}},
      {"policy",
       {{"hidden_dim", policy.hidden_dim},
        {"clip_epsilon", policy.clip_epsilon},
        {"epochs", policy.epochs},
        {"minibatches", policy.minibatches},
        {"gamma", policy.gamma},
        {"gae_lambda", policy.gae_lambda},
        {"entropy_coef", policy.entropy_coef},
        {"max_grad_norm", policy.max_grad_norm},
        {"lr_actor", policy.lr_actor},
        {"lr_critic", policy.lr_critic},
        {"lr_rfm", policy.lr_rfm},
        {"lr_agent_model", policy.lr_agent_model},
        {"normalize_advantages", policy.normalize_advantages}}},
      {"train",
       {{"total_env_steps", train.total_env_steps},
        {"episodes_per_iter", train.episodes_per_iter},
        {"ed_epochs", train.ed_epochs},
        {"eval_interval", train.eval_interval},
        {"checkpoint_interval", train.checkpoint_interval},
        {"workers", train.workers}}},
      {"eval",
       {{"episodes", eval.episodes},
        {"seed", eval.seed},
        {"use_eval_pool", eval.use_eval_pool}}},
  };
}

ExperimentConfig ExperimentConfig::FromJson(const json& user) {
  if (!user.is_object()) throw ConfigError("config must be a JSON object");
  if (!user.contains("schema_version")) throw ConfigError("config key 'schema_version' is missing");
  if (!user["schema_version"].is_number_integer() ||
      user["schema_version"].get<int>() != kConfigSchemaVersion) {
    throw ConfigError("config key 'schema_version' must be " +
                      std::to_string(kConfigSchemaVersion));
  }
  json j = Defaults();
  MergeStrict(j, user, "");

  ExperimentConfig c;
  try {
    c.variant = ParseVariant(j.at("variant").get<std::string>());
    c.seed = j.at("seed").get<uint64_t>();
  } catch (const json::exception&) {
    throw ConfigError("config key 'seed' is invalid");
  }
  c.env.grid_size = Read<int>(j, "env", "grid_size");
  c.env.n_agents = Read<int>(j, "env", "n_agents");
  c.env.episode_limit = Read<int>(j, "env", "episode_limit");
  c.env.prey_policy_seed = Read<uint64_t>(j, "env", "prey_policy_seed");
  c.env.reward_capture = Read<double>(j, "env", "reward_capture");
  c.env.step_cost = Read<double>(j, "env", "step_cost");
  c.env.capture_threshold = Read<int>(j, "env", "capture_threshold");
  c.env.capture_terminal = Read<bool>(j, "env", "capture_terminal");
  c.env.prey_policy = ParsePreyPolicy(Read<std::string>(j, "env", "prey_policy"));
  c.env.prey_move_prob = Read<double>(j, "env", "prey_move_prob");

  c.teams.pool_dir = Read<std::string>(j, "teams", "pool_dir");
  c.teams.pool.families.clear();
  for (const auto& name : Read<std::vector<std::string>>(j, "teams", "families")) {
    c.teams.pool.families.push_back(ParseFamily(name));
  }
  c.teams.pool.train_seeds = Read<std::vector<uint64_t>>(j, "teams", "train_seeds");
  c.teams.pool.eval_seeds = Read<std::vector<uint64_t>>(j, "teams", "eval_seeds");
  c.teams.pool.group_size = Read<int>(j, "teams", "group_size");
  c.teams.pool.pretrain.budget_steps = Read<int>(j, "teams", "pretrain_steps");
  c.teams.pool.pretrain.batch_size = Read<int>(j, "teams", "pretrain_batch_size");
  c.teams.pool.pretrain.replay_capacity = Read<int>(j, "teams", "replay_capacity");
  c.teams.pool.pretrain.warmup_steps = Read<int>(j, "teams", "warmup_steps");
  c.teams.pool.pretrain.eval_interval = Read<int>(j, "teams", "pretrain_eval_interval");
  c.teams.pool.pretrain.eval_episodes = Read<int>(j, "teams", "pretrain_eval_episodes");
  c.teams.m_groups = Read<int>(j, "teams", "m_groups");
  c.teams.act_mode = ParseActMode(Read<std::string>(j, "teams", "act_mode"));
  c.teams.temperature = Read<double>(j, "teams", "temperature");

  c.agent_model.hidden_dim = Read<int>(j, "agent_model", "hidden_dim");
  c.agent_model.embed_dim = Read<int>(j, "agent_model", "embed_dim");
  c.agent_model.decoder_hidden = Read<int>(j, "agent_model", "decoder_hidden");
  c.agent_model.target_mode =
      ParseTargetMode(Read<std::string>(j, "agent_model", "target_mode"));

  c.rfm.node_dim = Read<int>(j, "rfm", "node_dim");
  c.rfm.edge_dim = Read<int>(j, "rfm", "edge_dim");
  c.rfm.global_dim = Read<int>(j, "rfm", "global_dim");
  c.rfm.hidden_dim = Read<int>(j, "rfm", "hidden_dim");
  c.rfm.rounds = Read<int>(j, "rfm", "rounds");
  c.rfm.global_feedback = Read<bool>(j, "rfm", "global_feedback");
  c.representatives = Read<int>(j, "rfm", "representatives");

  c.policy.hidden_dim = Read<int>(j, "policy", "hidden_dim");
  c.policy.clip_epsilon = Read<double>(j, "policy", "clip_epsilon");
  c.policy.epochs = Read<int>(j, "policy", "epochs");
  c.policy.minibatches = Read<int>(j, "policy", "minibatches");
  c.policy.gamma = Read<double>(j, "policy", "gamma");
  c.policy.gae_lambda = Read<double>(j, "policy", "gae_lambda");
  c.policy.entropy_coef = Read<double>(j, "policy", "entropy_coef");
  c.policy.max_grad_norm = Read<double>(j, "policy", "max_grad_norm");
  c.policy.lr_actor = Read<double>(j, "policy", "lr_actor");
  c.policy.lr_critic = Read<double>(j, "policy", "lr_critic");
  c.policy.lr_rfm = Read<double>(j, "policy", "lr_rfm");
  c.policy.lr_agent_model = Read<double>(j, "policy", "lr_agent_model");
  c.policy.normalize_advantages = Read<bool>(j, "policy", "normalize_advantages");

  c.train.total_env_steps = Read<int64_t>(j, "train", "total_env_steps");
  c.train.episodes_per_iter = Read<int>(j, "train", "episodes_per_iter");
  c.train.ed_epochs = Read<int>(j, "train", "ed_epochs");
  c.train.eval_interval = Read<int64_t>(j, "train", "eval_interval");
  c.train.checkpoint_interval = Read<int>(j, "train", "checkpoint_interval");
  c.train.workers = Read<int>(j, "train", "workers");

  c.eval.episodes = Read<int>(j, "eval", "episodes");
  c.eval.seed = Read<uint64_t>(j, "eval", "seed");
  c.eval.use_eval_pool = Read<bool>(j, "eval", "use_eval_pool");

  c.Validate();
  return c;
}

uint64_t ExperimentConfig::Hash() const {
  const std::string text = ToJson().dump();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ApplyOverride(json& config, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  const json defaults = Defaults();
  const json* schema = &defaults;
  json* node = &config;
  size_t start = 0;
  while (true) {
    const size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty() || !schema->is_object() || !schema->contains(key)) {
      throw ConfigError("unknown config key '" + path + "'");
    }
    schema = &(*schema)[key];
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->contains(key)) (*node)[key] = json::object();
    node = &(*node)[key];
    start = dot + 1;
  }
}

ExperimentConfig LoadConfig(const std::filesystem::path& path,
                            std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  for (const std::string& o : overrides) ApplyOverride(j, o);
  return ExperimentConfig::FromJson(j);
}

}  // namespace mars
