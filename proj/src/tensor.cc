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

#include "mars/tensor.h"

#include <cmath>
#include <cstring>
#include <sstream>

#include "mars/errors.h"
#include "mars/parameters.h"

namespace mars {
namespace {

size_t Product(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ConfigError("tensor dimensions must be nonnegative");
    n *= static_cast<size_t>(d);
  }
  return n;
}

constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

void FnvBytes(uint64_t& h, const void* bytes, size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(Product(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (Product(shape_) != data_.size()) {
    throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                      " does not match shape " + ShapeString());
  }
}

Tensor Tensor::Vector(std::vector<double> values) {
  const int n = static_cast<int>(values.size());
  return Tensor({n}, std::move(values));
}

Tensor Tensor::Matrix(int rows, int cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

bool Tensor::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::ShapeString() const {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) out << "x";
    out << shape_[i];
  }
  out << "]";
  return out.str();
}

void ParameterSet::Add(const std::string& id, Tensor value) {
  if (!params_.emplace(id, std::move(value)).second) {
    throw ConfigError("duplicate parameter id '" + id + "'");
  }
}

const Tensor& ParameterSet::Get(const std::string& id) const {
  auto it = params_.find(id);
  if (it == params_.end()) throw ConfigError("unknown parameter id '" + id + "'");
  return it->second;
}

Tensor& ParameterSet::GetMutable(const std::string& id) {
  auto it = params_.find(id);
  if (it == params_.end()) throw ConfigError("unknown parameter id '" + id + "'");
  return it->second;
}

size_t ParameterSet::NumScalars() const {
  size_t n = 0;
  for (const auto& [id, t] : params_) n += t.size();
  return n;
}

uint64_t ParameterSet::Checksum() const {
  uint64_t h = kFnvOffset;
  for (const auto& [id, t] : params_) {
    FnvBytes(h, id.data(), id.size());
    for (int d : t.shape()) FnvBytes(h, &d, sizeof(d));
    FnvBytes(h, t.values().data(), t.size() * sizeof(double));
  }
  return h;
}

nlohmann::json ParameterSet::ToJson() const {
  nlohmann::json j;
  j["seed"] = seed_;
  nlohmann::json tensors = nlohmann::json::object();
  for (const auto& [id, t] : params_) {
    tensors[id] = {{"shape", t.shape()}, {"data", t.values()}};
  }
  j["tensors"] = std::move(tensors);
  return j;
}

ParameterSet ParameterSet::FromJson(const nlohmann::json& j) {
  try {
    ParameterSet set(j.at("seed").get<uint64_t>());
    for (const auto& [id, t] : j.at("tensors").items()) {
      set.Add(id, Tensor(t.at("shape").get<std::vector<int>>(),
                         t.at("data").get<std::vector<double>>()));
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed parameter file: ") + e.what());
  }
}

std::string ChecksumHex(uint64_t checksum) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(checksum));
  return buf;
}

Gradients ZeroGradients(const ParameterSet& params) {
  Gradients g;
  for (const auto& [id, t] : params.entries()) g.emplace(id, Tensor(t.shape()));
  return g;
}

}  // namespace mars
