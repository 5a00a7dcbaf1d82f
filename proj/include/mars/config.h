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

#ifndef MARS_CONFIG_H_
#define MARS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mars/env.h"
#include "mars/policy.h"
#include "mars/teams.h"

namespace mars {

inline constexpr int kConfigSchemaVersion = 1;

struct TeamsConfig {
  std::string pool_dir = "pool";
  PoolSpec pool;
  int m_groups = 2;
  ActMode act_mode = ActMode::kGreedy;
  double temperature = 1.0;
};

struct TrainConfig {
  int64_t total_env_steps = 1000000;
  int episodes_per_iter = 8;
  int ed_epochs = 1;
  int64_t eval_interval = 50000;     // env steps; 0 evaluates only at the end
  int checkpoint_interval = 0;       // iterations; 0 checkpoints only at the end
  int workers = 1;
};

struct EvalConfig {
  int episodes = 100;
  uint64_t seed = 12345;
  bool use_eval_pool = true;
};

struct ExperimentConfig {
  Variant variant = Variant::kMars;
  uint64_t seed = 1;
  EnvConfig env;
  TeamsConfig teams;
  AgentModelConfig agent_model;
  RfmConfig rfm;
  int representatives = 1;
  PolicyConfig policy;
  TrainConfig train;
  EvalConfig eval;

  // Cross-field checks; throws ConfigError.
  void Validate() const;
  ModelSpec MakeModelSpec() const;

  nlohmann::json ToJson() const;
  // Strict: unknown keys and type mismatches raise ConfigError naming the key.
  static ExperimentConfig FromJson(const nlohmann::json& j);
  uint64_t Hash() const;
};

// Applies "a.b.c=value" overrides; the value is parsed as JSON when possible
// and as a string otherwise. The path must name an existing key.
void ApplyOverride(nlohmann::json& config, const std::string& assignment);

ExperimentConfig LoadConfig(const std::filesystem::path& path,
                            std::span<const std::string> overrides);

}  // namespace mars

#endif  // MARS_CONFIG_H_
