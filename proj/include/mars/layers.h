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

#ifndef MARS_LAYERS_H_
#define MARS_LAYERS_H_

#include <span>
#include <string>
#include <vector>

#include "mars/parameters.h"
#include "mars/rng.h"
#include "mars/tape.h"
#include "mars/tensor.h"

namespace mars {

// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
// Creates `<prefix>.w` [in x out] and `<prefix>.b` [out].
void InitDense(ParameterSet& params, const std::string& prefix, int in, int out,
               Rng& rng);
Var Dense(Tape& tape, Var x, const ParameterSet& params,
          const std::string& prefix);

// Fully connected stack; tanh between layers, linear output.
// `sizes` = {in, hidden..., out}; layers are `<prefix>.0`, `<prefix>.1`, ...
void InitMlp(ParameterSet& params, const std::string& prefix,
             std::span<const int> sizes, Rng& rng);
Var Mlp(Tape& tape, Var x, const ParameterSet& params,
        const std::string& prefix, int num_layers);

// Gated recurrent cell (update gate z, reset gate r, tanh candidate):
//   z = sigmoid(x Wz + h Uz + bz), r = sigmoid(x Wr + h Ur + br)
//   c = tanh(x Wc + (r * h) Uc + bc), h' = (1 - z) h + z c
// Parameters: `<prefix>.wx` [in x 3h], `<prefix>.uzr` [h x 2h],
// `<prefix>.uc` [h x h], `<prefix>.b` [3h].
void InitGru(ParameterSet& params, const std::string& prefix, int input,
             int hidden, Rng& rng);
Var GruStep(Tape& tape, Var state, Var input, const ParameterSet& params,
            const std::string& prefix);
int GruHiddenSize(const ParameterSet& params, const std::string& prefix);

// Tensor-level conveniences (no gradient recording).
Tensor AffineForward(const Tensor& input, const Tensor& weights,
                     const Tensor& bias);
Tensor RecurrentStep(const Tensor& state, const Tensor& input,
                     const ParameterSet& params, const std::string& prefix);

std::vector<double> Softmax(std::span<const double> logits);
std::vector<double> LogSoftmax(std::span<const double> logits);

// Sets every tensor of `params` to zero.
void ZeroParameters(ParameterSet& params);

}  // namespace mars

#endif  // MARS_LAYERS_H_
