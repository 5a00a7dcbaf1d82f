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

#include "mars/optim.h"

#include <cmath>

#include "mars/errors.h"

namespace mars {
namespace {

nlohmann::json GradientsToJson(const Gradients& g) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, t] : g) j[id] = {{"shape", t.shape()}, {"data", t.values()}};
  return j;
}

Gradients GradientsFromJson(const nlohmann::json& j) {
  Gradients g;
  for (const auto& [id, t] : j.items()) {
    g.emplace(id, Tensor(t.at("shape").get<std::vector<int>>(),
                         t.at("data").get<std::vector<double>>()));
  }
  return g;
}

}  // namespace

void Adam::Step(const std::string& group, ParameterSet& params,
                const Gradients& grads, double learning_rate) {
  Slot& slot = slots_[group];
  if (slot.m.empty()) {
    slot.m = ZeroGradients(params);
    slot.v = ZeroGradients(params);
  }
  ++slot.t;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(slot.t));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(slot.t));
  for (auto& [id, p] : params.mutable_entries()) {
    auto git = grads.find(id);
    if (git == grads.end()) throw UsageError("adam: missing gradient for " + id);
    const Tensor& g = git->second;
    Tensor& m = slot.m.at(id);
    Tensor& v = slot.v.at(id);
    if (g.size() != p.size()) throw UsageError("adam: gradient shape mismatch for " + id);
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g[i];
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= learning_rate * mhat / (std::sqrt(vhat) + options_.epsilon);
    }
  }
}

int64_t Adam::steps(const std::string& group) const {
  auto it = slots_.find(group);
  return it == slots_.end() ? 0 : it->second.t;
}

nlohmann::json Adam::ToJson() const {
  nlohmann::json j;
  j["beta1"] = options_.beta1;
  j["beta2"] = options_.beta2;
  j["epsilon"] = options_.epsilon;
  nlohmann::json slots = nlohmann::json::object();
  for (const auto& [name, s] : slots_) {
    slots[name] = {{"t", s.t}, {"m", GradientsToJson(s.m)}, {"v", GradientsToJson(s.v)}};
  }
  j["slots"] = std::move(slots);
  return j;
}

Adam Adam::FromJson(const nlohmann::json& j) {
  try {
    Adam adam(AdamOptions{j.at("beta1").get<double>(), j.at("beta2").get<double>(),
                          j.at("epsilon").get<double>()});
    for (const auto& [name, s] : j.at("slots").items()) {
      Slot slot;
      slot.t = s.at("t").get<int64_t>();
      slot.m = GradientsFromJson(s.at("m"));
      slot.v = GradientsFromJson(s.at("v"));
      adam.slots_.emplace(name, std::move(slot));
    }
    return adam;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed optimizer state: ") + e.what());
  }
}

double GlobalNorm(std::span<const Gradients* const> grads) {
  double sq = 0.0;
  for (const Gradients* g : grads) {
    for (const auto& [id, t] : *g) {
      for (double v : t.values()) sq += v * v;
    }
  }
  return std::sqrt(sq);
}

void ScaleGradients(std::span<Gradients* const> grads, double factor) {
  for (Gradients* g : grads) {
    for (auto& [id, t] : *g) {
      for (double& v : t.values()) v *= factor;
    }
  }
}

double ClipGlobalNorm(std::span<Gradients* const> grads, double max_norm) {
  std::vector<const Gradients*> view(grads.begin(), grads.end());
  const double norm = GlobalNorm(view);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  if (max_norm > 0.0 && norm > max_norm) ScaleGradients(grads, max_norm / norm);
  return norm;
}

}  // namespace mars
