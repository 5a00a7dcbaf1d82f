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

// mars: pretrain team pools, train and evaluate controlled-team learners.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mars/config.h"
#include "mars/errors.h"
#include "mars/grad_suite.h"
#include "mars/teams.h"
#include "mars/trainer.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitUsage = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitInterrupted = 130;

std::atomic<bool> g_stop{false};

void OnSignal(int) { g_stop.store(true); }

struct Options {
  std::string config;
  std::string out = "out";
  std::vector<std::string> overrides;
  long long seed = -1;
  std::string checkpoint;
  std::string resume;
  int episodes = -1;
  std::vector<int> groups = {1, 2, 3, 4, 5};
  int inits = 5;
  bool force = false;
};

mars::ExperimentConfig Resolve(const Options& o) {
  if (o.config.empty()) throw mars::UsageError("--config is required");
  std::vector<std::string> overrides = o.overrides;
  if (o.seed >= 0) overrides.push_back("seed=" + std::to_string(o.seed));
  mars::ExperimentConfig c = mars::LoadConfig(o.config, overrides);
  c.teams.pool_dir = std::filesystem::absolute(c.teams.pool_dir).lexically_normal().string();
  return c;
}

void Echo(const mars::ExperimentConfig& c, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  std::ofstream f(out / "resolved_config.json");
  if (!f) throw mars::ConfigError("cannot write to output directory " + out.string());
  f << c.ToJson().dump(2) << "\n";
}

void PrintSummary(const mars::EvalSummary& s) {
  const nlohmann::json j = {{"episodes", s.episodes},
                            {"test_return_mean", s.mean_return},
                            {"test_return_std", s.std_return},
                            {"capture_rate", s.capture_rate},
                            {"mean_length", s.mean_length}};
  std::cout << j.dump(2) << "\n";
}

int PretrainPool(const Options& o) {
  const mars::ExperimentConfig c = Resolve(o);
  Echo(c, o.out);
  const std::filesystem::path dir = c.teams.pool_dir;
  if (std::filesystem::exists(dir / "manifest.json") && !o.force) {
    std::cerr << "pool already present at " << dir << " (use --force to rebuild)\n";
    mars::LoadPoolFor(c);
    return kExitOk;
  }
  std::cerr << "[pool] pretraining " << c.teams.pool.families.size() << " families into "
            << dir << "\n";
  const mars::TeamPool pool = mars::PretrainPool(c.teams.pool, c.env);
  mars::SavePool(pool, dir);
  for (const auto& p : pool.train) {
    std::cerr << "[pool] train " << mars::FamilyName(p.family) << " seed " << p.seed
              << " self-play return " << p.self_play_return << "\n";
  }
  return kExitOk;
}

int Train(const Options& o) {
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);
  std::filesystem::path out = o.out;
  if (!o.resume.empty()) {
    const nlohmann::json ckpt = mars::Trainer::ReadCheckpoint(o.resume);
    const mars::ExperimentConfig stored = mars::ExperimentConfig::FromJson(ckpt.at("config"));
    mars::Trainer t = mars::Trainer::FromCheckpoint(ckpt, mars::LoadPoolFor(stored));
    Echo(t.config(), out);
    return t.Train(out, &g_stop) == mars::Trainer::Status::kInterrupted ? kExitInterrupted
                                                                         : kExitOk;
  }
  const mars::ExperimentConfig c = Resolve(o);
  Echo(c, out);
  mars::Trainer t(c, mars::LoadPoolFor(c));
  return t.Train(out, &g_stop) == mars::Trainer::Status::kInterrupted ? kExitInterrupted
                                                                       : kExitOk;
}

mars::Trainer LoadForEval(const Options& o) {
  if (o.checkpoint.empty()) throw mars::UsageError("--checkpoint is required");
  const nlohmann::json ckpt = mars::Trainer::ReadCheckpoint(o.checkpoint);
  mars::ExperimentConfig stored = mars::ExperimentConfig::FromJson(ckpt.at("config"));
  mars::Trainer t = mars::Trainer::FromCheckpoint(ckpt, mars::LoadPoolFor(stored));
  if (!o.config.empty()) {
    const mars::ExperimentConfig c = Resolve(o);
    mars::CheckCompatible(stored, c);
    stored.eval = c.eval;
    // Evaluation settings come from the given config; learned state from the checkpoint.
    nlohmann::json j = t.Checkpoint();
    j["config"] = stored.ToJson();
    j["config_hash"] = mars::ChecksumHex(stored.Hash());
    return mars::Trainer::FromCheckpoint(j, mars::LoadPoolFor(stored));
  }
  return t;
}

int Eval(const Options& o) {
  const mars::Trainer t = LoadForEval(o);
  Echo(t.config(), o.out);
  const int episodes = o.episodes >= 0 ? o.episodes : t.config().eval.episodes;
  const mars::EvalSummary s = t.Evaluate(episodes);
  PrintSummary(s);
  return kExitOk;
}

int Sweep(const Options& o) {
  const mars::Trainer t = LoadForEval(o);
  Echo(t.config(), o.out);
  const int episodes = o.episodes >= 0 ? o.episodes : t.config().eval.episodes;
  const std::vector<mars::SweepRow> rows = mars::SweepGroups(t, o.groups, episodes);
  const std::string csv = mars::FormatSweep(rows);
  std::ofstream(std::filesystem::path(o.out) / "sweep.csv") << csv;
  std::cout << csv;
  return kExitOk;
}

int GradCheck(const Options& o) {
  const mars::ExperimentConfig c = Resolve(o);
  Echo(c, o.out);
  double worst = 0.0;
  for (const auto& r : mars::RunGradSuite(c.MakeModelSpec(), o.inits)) {
    std::printf("%-16s seed %llu max_rel_error %.3e\n", r.network.c_str(),
                static_cast<unsigned long long>(r.seed), r.max_error);
    worst = std::max(worst, r.max_error);
  }
  std::printf("worst %.3e\n", worst);
  if (worst >= 1e-4) throw mars::NumericError("gradient check exceeded tolerance 1e-4");
  return kExitOk;
}

int ValidateConfig(const Options& o) {
  const mars::ExperimentConfig c = Resolve(o);
  Echo(c, o.out);
  std::cerr << "config ok\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MARS: ad hoc teamwork with multiple uncontrolled teams"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", o.config, "experiment config (JSON)");
    if (needs_config) opt->required();
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--set", o.overrides, "override key.path=value (repeatable)");
    cmd->add_option("--seed", o.seed, "master seed override");
  };
  CLI::App* pretrain = app.add_subcommand("pretrain-pool", "pretrain the uncontrolled team pool");
  add_common(pretrain, true);
  pretrain->add_flag("--force", o.force, "rebuild an existing pool");
  CLI::App* train = app.add_subcommand("train", "train a controlled-team learner");
  add_common(train, false);
  train->add_option("--resume", o.resume, "checkpoint to resume from");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, false);
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  eval->add_option("--episodes", o.episodes, "evaluation episodes");
  CLI::App* sweep = app.add_subcommand("sweep", "evaluate a checkpoint across group counts");
  add_common(sweep, false);
  sweep->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  sweep->add_option("--episodes", o.episodes, "evaluation episodes per group count");
  sweep->add_option("--groups", o.groups, "group counts")->delimiter(',');
  CLI::App* grad = app.add_subcommand("grad-check", "finite-difference gradient checks");
  add_common(grad, true);
  grad->add_option("--inits", o.inits, "random initializations per network");
  CLI::App* validate = app.add_subcommand("validate-config", "validate and echo a config");
  add_common(validate, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (*pretrain) return PretrainPool(o);
    if (*train) return Train(o);
    if (*eval) return Eval(o);
    if (*sweep) return Sweep(o);
    if (*grad) return GradCheck(o);
    if (*validate) return ValidateConfig(o);
  } catch (const mars::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mars::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const mars::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: malformed json: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
