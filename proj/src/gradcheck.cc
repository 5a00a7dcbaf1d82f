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

#include "mars/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "mars/errors.h"

namespace mars {
namespace {

double EvalLoss(const LossBuilder& loss) {
  Tape tape(false);
  return tape.scalar(loss(tape));
}

}  // namespace

std::vector<GradCheckEntry> CompareWithFiniteDifferences(
    std::span<ParameterSet* const> sets, std::span<const std::string> names,
    const LossBuilder& loss, double step) {
  if (sets.size() != names.size()) {
    throw UsageError("gradcheck: one name per parameter set required");
  }
  std::vector<Gradients> analytic;
  {
    Tape tape(true);
    tape.Backward(loss(tape));
    for (ParameterSet* s : sets) analytic.push_back(tape.GradientsFor(*s));
  }
  std::vector<GradCheckEntry> out;
  for (size_t k = 0; k < sets.size(); ++k) {
    for (auto& [id, tensor] : sets[k]->mutable_entries()) {
      const Tensor& a = analytic[k].at(id);
      double max_diff = 0.0, max_a = 0.0, max_n = 0.0;
      for (size_t i = 0; i < tensor.size(); ++i) {
        const double orig = tensor[i];
        tensor[i] = orig + step;
        const double up = EvalLoss(loss);
        tensor[i] = orig - step;
        const double down = EvalLoss(loss);
        tensor[i] = orig;
        const double numeric = (up - down) / (2.0 * step);
        max_diff = std::max(max_diff, std::abs(a[i] - numeric));
        max_a = std::max(max_a, std::abs(a[i]));
        max_n = std::max(max_n, std::abs(numeric));
      }
      const double denom = std::max({max_a, max_n, 1e-8});
      out.push_back({names[k] + "/" + id, max_diff / denom});
    }
  }
  return out;
}

double MaxError(std::span<const GradCheckEntry> entries) {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

}  // namespace mars
