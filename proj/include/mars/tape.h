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

#ifndef MARS_TAPE_H_
#define MARS_TAPE_H_

#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mars/parameters.h"
#include "mars/tensor.h"

namespace mars {

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
};

// Reverse-mode autodiff over 2-D tensors.
//
// Every op computes its value eagerly. When recording is enabled it also
// stores a closure that propagates the output gradient to its inputs.
// Parameter leaves reference the ParameterSet storage directly, so the set
// must outlive the tape and must not be mutated while the tape is alive.
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var Constant(Tensor value);
  Var Param(const ParameterSet& set, const std::string& id);

  const Tensor& value(Var v) const;
  double scalar(Var v) const;

  Var MatMul(Var a, Var b);
  // a[m x n] + bias[n] broadcast over rows.
  Var AddBias(Var a, Var bias);
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);
  // a[m x n] * column[m x 1] broadcast over columns.
  Var MulColumn(Var a, Var column);
  Var Scale(Var a, double s);
  Var AddScalar(Var a, double s);
  Var Tanh(Var a);
  Var Sigmoid(Var a);
  Var Exp(Var a);
  Var Log(Var a);
  Var Square(Var a);
  Var ConcatCols(std::span<const Var> parts);
  Var SliceCols(Var a, int begin, int count);
  Var GatherRows(Var a, std::vector<int> index);
  // Row-wise sum into `num_segments` buckets; empty buckets are zero rows.
  Var SegmentSum(Var a, std::vector<int> segment, int num_segments);
  Var LogSoftmax(Var a);
  // out[i] = a[i, column[i]], shape [m x 1].
  Var Pick(Var a, std::vector<int> column);
  Var Minimum(Var a, Var b);
  // Gradient passes only where lo <= a <= hi.
  Var Clamp(Var a, double lo, double hi);
  Var Sum(Var a);
  Var Mean(Var a);
  Var StopGradient(Var a);

  // Backpropagates from a 1x1 loss. Throws UsageError for non-scalar losses.
  void Backward(Var loss);

  // Gradient of the last Backward() w.r.t. every tensor of `set`; entries the
  // loss does not depend on are zero.
  Gradients GradientsFor(const ParameterSet& set) const;
  Tensor GradientOf(Var v) const;

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* view = nullptr;
    Tensor grad;
    bool needs_grad = false;
    std::function<void(Tape&, int)> backward;
    const Tensor& value() const { return view ? *view : owned; }
  };

  Var Push(Tensor value, bool needs_grad,
           std::function<void(Tape&, int)> backward);
  bool NeedsGrad(Var v) const { return nodes_[v.id].needs_grad; }
  Tensor& GradRef(int id);
  const Tensor& GradOf(int id) const { return nodes_[id].grad; }
  void Check(Var v) const;

  bool record_;
  std::vector<Node> nodes_;
  std::map<std::pair<const ParameterSet*, std::string>, int> leaves_;
};

}  // namespace mars

#endif  // MARS_TAPE_H_
