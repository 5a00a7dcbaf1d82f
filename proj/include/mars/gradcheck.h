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

#ifndef MARS_GRADCHECK_H_
#define MARS_GRADCHECK_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mars/parameters.h"
#include "mars/tape.h"

namespace mars {

struct GradCheckEntry {
  std::string parameter;  // "<set>/<id>"
  double max_rel_error = 0.0;
};

// Builds a scalar loss on the given tape from the parameter sets under test.
using LossBuilder = std::function<Var(Tape&)>;

// Compares reverse-mode gradients against central finite differences.
//
// The error for one parameter tensor is max_j |analytic_j - numeric_j| divided
// by max(max_j |analytic_j|, max_j |numeric_j|, 1e-8).
std::vector<GradCheckEntry> CompareWithFiniteDifferences(
    std::span<ParameterSet* const> sets, std::span<const std::string> names,
    const LossBuilder& loss, double step = 1e-5);

double MaxError(std::span<const GradCheckEntry> entries);

}  // namespace mars

#endif  // MARS_GRADCHECK_H_
