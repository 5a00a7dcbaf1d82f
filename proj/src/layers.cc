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

#include "mars/layers.h"

#include <algorithm>
#include <cmath>

#include "mars/errors.h"

namespace mars {
namespace {

Tensor UniformTensor(std::vector<int> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.Uniform(-bound, bound);
  return t;
}

}  // namespace

void InitDense(ParameterSet& params, const std::string& prefix, int in, int out,
               Rng& rng) {
  if (in <= 0 || out <= 0) throw ConfigError("dense layer sizes must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  params.Add(prefix + ".w", UniformTensor({in, out}, bound, rng));
  params.Add(prefix + ".b", UniformTensor({out}, bound, rng));
}

Var Dense(Tape& tape, Var x, const ParameterSet& params,
          const std::string& prefix) {
  Var w = tape.Param(params, prefix + ".w");
  Var b = tape.Param(params, prefix + ".b");
  return tape.AddBias(tape.MatMul(x, w), b);
}

void InitMlp(ParameterSet& params, const std::string& prefix,
             std::span<const int> sizes, Rng& rng) {
  if (sizes.size() < 2) throw ConfigError("mlp needs at least two sizes");
  for (size_t i = 0; i + 1 < sizes.size(); ++i) {
    InitDense(params, prefix + "." + std::to_string(i), sizes[i], sizes[i + 1],
              rng);
  }
}

Var Mlp(Tape& tape, Var x, const ParameterSet& params,
        const std::string& prefix, int num_layers) {
  Var h = x;
  for (int i = 0; i < num_layers; ++i) {
    h = Dense(tape, h, params, prefix + "." + std::to_string(i));
    if (i + 1 < num_layers) h = tape.Tanh(h);
  }
  return h;
}

void InitGru(ParameterSet& params, const std::string& prefix, int input,
             int hidden, Rng& rng) {
  if (input <= 0 || hidden <= 0) throw ConfigError("gru sizes must be positive");
  const double bx = 1.0 / std::sqrt(static_cast<double>(input));
  const double bh = 1.0 / std::sqrt(static_cast<double>(hidden));
  params.Add(prefix + ".wx", UniformTensor({input, 3 * hidden}, bx, rng));
  params.Add(prefix + ".uzr", UniformTensor({hidden, 2 * hidden}, bh, rng));
  params.Add(prefix + ".uc", UniformTensor({hidden, hidden}, bh, rng));
  params.Add(prefix + ".b", UniformTensor({3 * hidden}, bh, rng));
}

int GruHiddenSize(const ParameterSet& params, const std::string& prefix) {
  return params.Get(prefix + ".uc").cols();
}

Var GruStep(Tape& tape, Var state, Var input, const ParameterSet& params,
            const std::string& prefix) {
  const int h = GruHiddenSize(params, prefix);
  if (tape.value(state).cols() != h) {
    throw ConfigError("gru: state width " +
                      std::to_string(tape.value(state).cols()) +
                      " does not match hidden size " + std::to_string(h));
  }
  if (tape.value(input).cols() != params.Get(prefix + ".wx").rows()) {
    throw ConfigError("gru: input width does not match configuration");
  }
  Var xw = tape.AddBias(tape.MatMul(input, tape.Param(params, prefix + ".wx")),
                        tape.Param(params, prefix + ".b"));
  Var hzr = tape.MatMul(state, tape.Param(params, prefix + ".uzr"));
  Var z = tape.Sigmoid(
      tape.Add(tape.SliceCols(xw, 0, h), tape.SliceCols(hzr, 0, h)));
  Var r = tape.Sigmoid(
      tape.Add(tape.SliceCols(xw, h, h), tape.SliceCols(hzr, h, h)));
  Var c = tape.Tanh(tape.Add(
      tape.SliceCols(xw, 2 * h, h),
      tape.MatMul(tape.Mul(r, state), tape.Param(params, prefix + ".uc"))));
  return tape.Add(state, tape.Mul(z, tape.Sub(c, state)));
}

Tensor AffineForward(const Tensor& input, const Tensor& weights,
                     const Tensor& bias) {
  Tape tape(false);
  Var x = tape.Constant(input);
  Var w = tape.Constant(weights);
  Var b = tape.Constant(bias);
  const Tensor& out = tape.value(tape.AddBias(tape.MatMul(x, w), b));
  if (input.rank() == 1) return Tensor::Vector(out.values());
  return out;
}

Tensor RecurrentStep(const Tensor& state, const Tensor& input,
                     const ParameterSet& params, const std::string& prefix) {
  Tape tape(false);
  Var h = tape.Constant(Tensor({state.rows(), state.cols()}, state.values()));
  Var x = tape.Constant(Tensor({input.rows(), input.cols()}, input.values()));
  const Tensor& out = tape.value(GruStep(tape, h, x, params, prefix));
  if (state.rank() == 1) return Tensor::Vector(out.values());
  return out;
}

std::vector<double> Softmax(std::span<const double> logits) {
  std::vector<double> p = LogSoftmax(logits);
  for (double& v : p) v = std::exp(v);
  return p;
}

std::vector<double> LogSoftmax(std::span<const double> logits) {
  if (logits.empty()) throw ConfigError("softmax of an empty vector");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double lz = mx + std::log(z);
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lz;
  return out;
}

void ZeroParameters(ParameterSet& params) {
  for (auto& [id, t] : params.mutable_entries()) {
    std::fill(t.values().begin(), t.values().end(), 0.0);
  }
}

}  // namespace mars
