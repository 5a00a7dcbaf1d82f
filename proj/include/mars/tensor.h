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

#ifndef MARS_TENSOR_H_
#define MARS_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mars {

// Dense row-major tensor of doubles. Rank-1 tensors behave as a single row
// when used as a matrix.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor Vector(std::vector<double> values);
  static Tensor Matrix(int rows, int cols, std::vector<double> values);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
  int cols() const { return shape_.empty() ? 1 : shape_.back(); }
  size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }
  double& at(int r, int c) { return data_[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const {
    return data_[static_cast<size_t>(r) * cols() + c];
  }
  std::span<const double> row(int r) const {
    return std::span<const double>(data_).subspan(
        static_cast<size_t>(r) * cols(), cols());
  }
  std::span<double> row(int r) {
    return std::span<double>(data_).subspan(static_cast<size_t>(r) * cols(),
                                            cols());
  }

  bool AllFinite() const;
  std::string ShapeString() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace mars

#endif  // MARS_TENSOR_H_
