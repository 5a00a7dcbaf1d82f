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

#ifndef MARS_GRAD_SUITE_H_
#define MARS_GRAD_SUITE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "mars/gradcheck.h"
#include "mars/policy.h"

namespace mars {

// Networks covered by the finite-difference suite.
const std::vector<std::string>& GradSuiteNetworks();

struct GradSuiteResult {
  std::string network;
  uint64_t seed = 0;
  std::vector<GradCheckEntry> entries;
  double max_error = 0.0;
};

// Checks one named network with parameters and inputs drawn from `seed`.
// Dimensions come from `spec` (variant is ignored).
GradSuiteResult CheckNetwork(const std::string& network, const ModelSpec& spec, uint64_t seed);

// Every network at each of `inits` seeds (1..inits).
std::vector<GradSuiteResult> RunGradSuite(const ModelSpec& spec, int inits);

}  // namespace mars

#endif  // MARS_GRAD_SUITE_H_
