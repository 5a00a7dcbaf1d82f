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

#ifndef MARS_OPTIM_H_
#define MARS_OPTIM_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "json.hpp"
#include "mars/parameters.h"

namespace mars {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  friend bool operator==(const AdamOptions&, const AdamOptions&) = default;
};

// Adam with one moment slot per named parameter group, so each group can use
// its own learning rate.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void Step(const std::string& group, ParameterSet& params,
            const Gradients& grads, double learning_rate);

  int64_t steps(const std::string& group) const;

  nlohmann::json ToJson() const;
  static Adam FromJson(const nlohmann::json& j);

  friend bool operator==(const Adam&, const Adam&) = default;

 private:
  struct Slot {
    Gradients m;
    Gradients v;
    int64_t t = 0;
    friend bool operator==(const Slot&, const Slot&) = default;
  };
  AdamOptions options_;
  std::map<std::string, Slot> slots_;
};

// L2 norm over every tensor of every gradient map.
double GlobalNorm(std::span<const Gradients* const> grads);
void ScaleGradients(std::span<Gradients* const> grads, double factor);

// Scales all maps so their joint norm is at most `max_norm`; returns the norm
// before clipping.
double ClipGlobalNorm(std::span<Gradients* const> grads, double max_norm);

}  // namespace mars

#endif  // MARS_OPTIM_H_
