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

#ifndef MARS_PARAMETERS_H_
#define MARS_PARAMETERS_H_

#include <cstdint>
#include <map>
#include <string>

#include "json.hpp"
#include "mars/tensor.h"

namespace mars {

// Gradient per parameter id, same shapes as the parameters.
using Gradients = std::map<std::string, Tensor>;

// Named collection of learnable tensors. Iteration order is the lexicographic
// order of ids, which every reduction over parameters relies on.
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(uint64_t seed) : seed_(seed) {}

  void Add(const std::string& id, Tensor value);
  bool Contains(const std::string& id) const { return params_.count(id) > 0; }
  const Tensor& Get(const std::string& id) const;
  Tensor& GetMutable(const std::string& id);

  const std::map<std::string, Tensor>& entries() const { return params_; }
  std::map<std::string, Tensor>& mutable_entries() { return params_; }
  uint64_t seed() const { return seed_; }
  size_t NumScalars() const;

  // FNV-1a over ids, shapes and raw value bytes.
  uint64_t Checksum() const;

  nlohmann::json ToJson() const;
  static ParameterSet FromJson(const nlohmann::json& j);

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::map<std::string, Tensor> params_;
  uint64_t seed_ = 0;
};

std::string ChecksumHex(uint64_t checksum);

// Zero-valued gradient map matching `params`.
Gradients ZeroGradients(const ParameterSet& params);

}  // namespace mars

#endif  // MARS_PARAMETERS_H_
