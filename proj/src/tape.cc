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

#include "mars/tape.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "mars/errors.h"

namespace mars {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> ConstMap(const Tensor& t, int rows, int cols) {
  return Eigen::Map<const RowMatrix>(t.values().data(), rows, cols);
}

Eigen::Map<RowMatrix> MutMap(Tensor& t, int rows, int cols) {
  return Eigen::Map<RowMatrix>(t.values().data(), rows, cols);
}


Tensor Like(const Tensor& t) { return Tensor({t.rows(), t.cols()}); }

void RequireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + a.ShapeString() +
                      " vs " + b.ShapeString());
  }
}

}  // namespace

void Tape::Check(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
    throw UsageError("variable does not belong to this tape");
  }
}

Var Tape::Push(Tensor value, bool needs_grad,
               std::function<void(Tape&, int)> backward) {
  Node node;
  node.owned = std::move(value);
  node.needs_grad = record_ && needs_grad;
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::GradRef(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Like(n.value());
  return n.grad;
}

Var Tape::Constant(Tensor value) { return Push(std::move(value), false, {}); }

Var Tape::Param(const ParameterSet& set, const std::string& id) {
  auto key = std::make_pair(&set, id);
  auto it = leaves_.find(key);
  if (it != leaves_.end()) return Var{it->second};
  Node node;
  node.view = &set.Get(id);
  node.needs_grad = record_;
  nodes_.push_back(std::move(node));
  const int nid = static_cast<int>(nodes_.size()) - 1;
  leaves_.emplace(std::move(key), nid);
  return Var{nid};
}

const Tensor& Tape::value(Var v) const {
  Check(v);
  return nodes_[v.id].value();
}

double Tape::scalar(Var v) const {
  const Tensor& t = value(v);
  if (t.size() != 1) throw UsageError("value is not a scalar");
  return t[0];
}

Var Tape::MatMul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  const int m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k) {
    throw ConfigError("matmul: shape mismatch " + A.ShapeString() + " x " +
                      B.ShapeString());
  }
  Tensor C({m, n});
  MutMap(C, m, n).noalias() = ConstMap(A, m, k) * ConstMap(B, k, n);
  const bool ga = NeedsGrad(a), gb = NeedsGrad(b);
  return Push(std::move(C), ga || gb, [a, b, ga, gb, m, k, n](Tape& t, int self) {
    const auto g = ConstMap(t.GradOf(self), m, n);
    if (ga) MutMap(t.GradRef(a.id), m, k).noalias() += g * ConstMap(t.value(b), k, n).transpose();
    if (gb) MutMap(t.GradRef(b.id), k, n).noalias() += ConstMap(t.value(a), m, k).transpose() * g;
  });
}

Var Tape::AddBias(Var a, Var bias) {
  const Tensor& A = value(a);
  const Tensor& B = value(bias);
  if (B.size() != static_cast<size_t>(A.cols())) {
    throw ConfigError("bias: shape mismatch " + A.ShapeString() + " + " +
                      B.ShapeString());
  }
  Tensor C = Like(A);
  const int m = A.rows(), n = A.cols();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) C.at(i, j) = A.at(i, j) + B[j];
  }
  const bool ga = NeedsGrad(a), gb = NeedsGrad(bias);
  return Push(std::move(C), ga || gb, [a, bias, ga, gb, m, n](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    if (ga) {
      Tensor& da = t.GradRef(a.id);
      for (size_t i = 0; i < g.size(); ++i) da[i] += g[i];
    }
    if (gb) {
      Tensor& db = t.GradRef(bias.id);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) db[j] += g.at(i, j);
      }
    }
  });
}

Var Tape::Add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  RequireSameShape(A, B, "add");
  Tensor C = Like(A);
  for (size_t i = 0; i < C.size(); ++i) C[i] = A[i] + B[i];
  const bool ga = NeedsGrad(a), gb = NeedsGrad(b);
  return Push(std::move(C), ga || gb, [a, b, ga, gb](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    if (ga) {
      Tensor& d = t.GradRef(a.id);
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (gb) {
      Tensor& d = t.GradRef(b.id);
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

Var Tape::Sub(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  RequireSameShape(A, B, "sub");
  Tensor C = Like(A);
  for (size_t i = 0; i < C.size(); ++i) C[i] = A[i] - B[i];
  const bool ga = NeedsGrad(a), gb = NeedsGrad(b);
  return Push(std::move(C), ga || gb, [a, b, ga, gb](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    if (ga) {
      Tensor& d = t.GradRef(a.id);
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (gb) {
      Tensor& d = t.GradRef(b.id);
      for (size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
    }
  });
}

Var Tape::Mul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  RequireSameShape(A, B, "mul");
  Tensor C = Like(A);
  for (size_t i = 0; i < C.size(); ++i) C[i] = A[i] * B[i];
  const bool ga = NeedsGrad(a), gb = NeedsGrad(b);
  return Push(std::move(C), ga || gb, [a, b, ga, gb](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    const Tensor& A = t.value(a);
    const Tensor& B = t.value(b);
    if (ga) {
      Tensor& d = t.GradRef(a.id);
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * B[i];
    }
    if (gb) {
      Tensor& d = t.GradRef(b.id);
      for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * A[i];
    }
  });
}

Var Tape::MulColumn(Var a, Var column) {
  const Tensor& A = value(a);
  const Tensor& c = value(column);
  if (c.size() != static_cast<size_t>(A.rows())) {
    throw ConfigError("mul_column: shape mismatch " + A.ShapeString() + " * " +
                      c.ShapeString());
  }
  const int m = A.rows(), n = A.cols();
  Tensor C = Like(A);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) C.at(i, j) = A.at(i, j) * c[i];
  }
  const bool ga = NeedsGrad(a), gc = NeedsGrad(column);
  return Push(std::move(C), ga || gc, [a, column, ga, gc, m, n](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    const Tensor& A = t.value(a);
    const Tensor& c = t.value(column);
    if (ga) {
      Tensor& d = t.GradRef(a.id);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) d.at(i, j) += g.at(i, j) * c[i];
      }
    }
    if (gc) {
      Tensor& d = t.GradRef(column.id);
      for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += g.at(i, j) * A.at(i, j);
        d[i] += acc;
      }
    }
  });
}

Var Tape::Scale(Var a, double s) {
  const Tensor& A = value(a);
  Tensor C = Like(A);
  for (size_t i = 0; i < C.size(); ++i) C[i] = A[i] * s;
  return Push(std::move(C), NeedsGrad(a), [a, s](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    Tensor& d = t.GradRef(a.id);
    for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * s;
  });
}

Var Tape::AddScalar(Var a, double s) {
  const Tensor& A = value(a);
  Tensor C = Like(A);
  for (size_t i = 0; i < C.size(); ++i) C[i] = A[i] + s;
  return Push(std::move(C), NeedsGrad(a), [a](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    Tensor& d = t.GradRef(a.id);
    for (size_t i = 0; i < g.size(); ++i) d[i] += g[i];
  });
}

Var Tape::Tanh(Var a) {
  const Tensor& A = value(a);
  Tensor C = Like(A);
  for (size_t i = 0; i < C.size(); ++i) C[i] = std::tanh(A[i]);
  return Push(std::move(C), NeedsGrad(a), [a](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    const Tensor& y = t.value(Var{self});
    Tensor& d = t.GradRef(a.id);
    for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::Sigmoid(Var a) {
  const Tensor& A = value(a);
  Tensor C = Like(A);
  for (size_t i = 0; i < C.size(); ++i) C[i] = 1.0 / (1.0 + std::exp(-A[i]));
  return Push(std::move(C), NeedsGrad(a), [a](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    const Tensor& y = t.value(Var{self});
    Tensor& d = t.GradRef(a.id);
    for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::Exp(Var a) {
  const Tensor& A = value(a);
  Tensor C = Like(A);
  for (size_t i = 0; i < C.size(); ++i) C[i] = std::exp(A[i]);
  return Push(std::move(C), NeedsGrad(a), [a](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    const Tensor& y = t.value(Var{self});
    Tensor& d = t.GradRef(a.id);
    for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] * y[i];
  });
}

Var Tape::Log(Var a) {
  const Tensor& A = value(a);
  Tensor C = Like(A);
  for (size_t i = 0; i < C.size(); ++i) C[i] = std::log(A[i]);
  return Push(std::move(C), NeedsGrad(a), [a](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    const Tensor& x = t.value(a);
    Tensor& d = t.GradRef(a.id);
    for (size_t i = 0; i < g.size(); ++i) d[i] += g[i] / x[i];
  });
}

Var Tape::Square(Var a) {
  const Tensor& A = value(a);
  Tensor C = Like(A);
  for (size_t i = 0; i < C.size(); ++i) C[i] = A[i] * A[i];
  return Push(std::move(C), NeedsGrad(a), [a](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    const Tensor& x = t.value(a);
    Tensor& d = t.GradRef(a.id);
    for (size_t i = 0; i < g.size(); ++i) d[i] += 2.0 * g[i] * x[i];
  });
}

Var Tape::ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) throw ConfigError("concat: no inputs");
  const int m = value(parts[0]).rows();
  int total = 0;
  bool any_grad = false;
  for (Var p : parts) {
    if (value(p).rows() != m) throw ConfigError("concat: row count mismatch");
    total += value(p).cols();
    any_grad = any_grad || NeedsGrad(p);
  }
  Tensor C({m, total});
  int offset = 0;
  for (Var p : parts) {
    const Tensor& P = value(p);
    const int w = P.cols();
    for (int i = 0; i < m; ++i) {
      std::copy_n(P.row(i).begin(), w, C.row(i).begin() + offset);
    }
    offset += w;
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return Push(std::move(C), any_grad, [ps, m](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    int offset = 0;
    for (Var p : ps) {
      const int w = t.value(p).cols();
      if (t.NeedsGrad(p)) {
        Tensor& d = t.GradRef(p.id);
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < w; ++j) d.at(i, j) += g.at(i, offset + j);
        }
      }
      offset += w;
    }
  });
}

Var Tape::SliceCols(Var a, int begin, int count) {
  const Tensor& A = value(a);
  if (begin < 0 || count <= 0 || begin + count > A.cols()) {
    throw ConfigError("slice: column range out of bounds");
  }
  const int m = A.rows();
  Tensor C({m, count});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < count; ++j) C.at(i, j) = A.at(i, begin + j);
  }
  return Push(std::move(C), NeedsGrad(a), [a, begin, count, m](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    Tensor& d = t.GradRef(a.id);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < count; ++j) d.at(i, begin + j) += g.at(i, j);
    }
  });
}

Var Tape::GatherRows(Var a, std::vector<int> index) {
  const Tensor& A = value(a);
  const int n = A.cols();
  const int m = static_cast<int>(index.size());
  Tensor C({m, n});
  for (int i = 0; i < m; ++i) {
    if (index[i] < 0 || index[i] >= A.rows()) {
      throw ConfigError("gather: row index out of range");
    }
    std::copy_n(A.row(index[i]).begin(), n, C.row(i).begin());
  }
  return Push(std::move(C), NeedsGrad(a),
              [a, index = std::move(index), n](Tape& t, int self) {
                const Tensor& g = t.GradOf(self);
                Tensor& d = t.GradRef(a.id);
                for (size_t i = 0; i < index.size(); ++i) {
                  for (int j = 0; j < n; ++j) {
                    d.at(index[i], j) += g.at(static_cast<int>(i), j);
                  }
                }
              });
}

Var Tape::SegmentSum(Var a, std::vector<int> segment, int num_segments) {
  const Tensor& A = value(a);
  if (static_cast<int>(segment.size()) != A.rows()) {
    throw ConfigError("segment_sum: one segment id per row required");
  }
  if (num_segments <= 0) throw ConfigError("segment_sum: no segments");
  const int n = A.cols();
  Tensor C({num_segments, n});
  for (int i = 0; i < A.rows(); ++i) {
    if (segment[i] < 0 || segment[i] >= num_segments) {
      throw ConfigError("segment_sum: segment id out of range");
    }
    for (int j = 0; j < n; ++j) C.at(segment[i], j) += A.at(i, j);
  }
  return Push(std::move(C), NeedsGrad(a),
              [a, segment = std::move(segment), n](Tape& t, int self) {
                const Tensor& g = t.GradOf(self);
                Tensor& d = t.GradRef(a.id);
                for (size_t i = 0; i < segment.size(); ++i) {
                  for (int j = 0; j < n; ++j) {
                    d.at(static_cast<int>(i), j) += g.at(segment[i], j);
                  }
                }
              });
}

Var Tape::LogSoftmax(Var a) {
  const Tensor& A = value(a);
  const int m = A.rows(), n = A.cols();
  Tensor C = Like(A);
  for (int i = 0; i < m; ++i) {
    double mx = A.at(i, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, A.at(i, j));
    double z = 0.0;
    for (int j = 0; j < n; ++j) z += std::exp(A.at(i, j) - mx);
    const double lz = mx + std::log(z);
    for (int j = 0; j < n; ++j) C.at(i, j) = A.at(i, j) - lz;
  }
  return Push(std::move(C), NeedsGrad(a), [a, m, n](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    const Tensor& y = t.value(Var{self});
    Tensor& d = t.GradRef(a.id);
    for (int i = 0; i < m; ++i) {
      double gs = 0.0;
      for (int j = 0; j < n; ++j) gs += g.at(i, j);
      for (int j = 0; j < n; ++j) {
        d.at(i, j) += g.at(i, j) - std::exp(y.at(i, j)) * gs;
      }
    }
  });
}

Var Tape::Pick(Var a, std::vector<int> column) {
  const Tensor& A = value(a);
  const int m = A.rows();
  if (static_cast<int>(column.size()) != m) {
    throw ConfigError("pick: one column per row required");
  }
  Tensor C({m, 1});
  for (int i = 0; i < m; ++i) {
    if (column[i] < 0 || column[i] >= A.cols()) {
      throw UsageError("pick: column index out of range");
    }
    C[i] = A.at(i, column[i]);
  }
  return Push(std::move(C), NeedsGrad(a),
              [a, column = std::move(column)](Tape& t, int self) {
                const Tensor& g = t.GradOf(self);
                Tensor& d = t.GradRef(a.id);
                for (size_t i = 0; i < column.size(); ++i) {
                  d.at(static_cast<int>(i), column[i]) += g[i];
                }
              });
}

Var Tape::Minimum(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  RequireSameShape(A, B, "minimum");
  Tensor C = Like(A);
  for (size_t i = 0; i < C.size(); ++i) C[i] = std::min(A[i], B[i]);
  const bool ga = NeedsGrad(a), gb = NeedsGrad(b);
  return Push(std::move(C), ga || gb, [a, b, ga, gb](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    const Tensor& A = t.value(a);
    const Tensor& B = t.value(b);
    for (size_t i = 0; i < g.size(); ++i) {
      // Ties route the gradient to the first argument.
      if (A[i] <= B[i]) {
        if (ga) t.GradRef(a.id)[i] += g[i];
      } else if (gb) {
        t.GradRef(b.id)[i] += g[i];
      }
    }
  });
}

Var Tape::Clamp(Var a, double lo, double hi) {
  const Tensor& A = value(a);
  Tensor C = Like(A);
  for (size_t i = 0; i < C.size(); ++i) C[i] = std::clamp(A[i], lo, hi);
  return Push(std::move(C), NeedsGrad(a), [a, lo, hi](Tape& t, int self) {
    const Tensor& g = t.GradOf(self);
    const Tensor& x = t.value(a);
    Tensor& d = t.GradRef(a.id);
    for (size_t i = 0; i < g.size(); ++i) {
      if (x[i] >= lo && x[i] <= hi) d[i] += g[i];
    }
  });
}

Var Tape::Sum(Var a) {
  const Tensor& A = value(a);
  double s = 0.0;
  for (double v : A.values()) s += v;
  return Push(Tensor({1, 1}, s), NeedsGrad(a), [a](Tape& t, int self) {
    const double g = t.GradOf(self)[0];
    Tensor& d = t.GradRef(a.id);
    for (size_t i = 0; i < d.size(); ++i) d[i] += g;
  });
}

Var Tape::Mean(Var a) {
  const double n = static_cast<double>(value(a).size());
  return Scale(Sum(a), 1.0 / n);
}

Var Tape::StopGradient(Var a) {
  const Tensor& A = value(a);
  return Constant(Tensor({A.rows(), A.cols()}, A.values()));
}

void Tape::Backward(Var loss) {
  Check(loss);
  if (nodes_[loss.id].value().size() != 1) {
    throw UsageError("backward: loss must be a scalar, got shape " +
                     nodes_[loss.id].value().ShapeString());
  }
  if (!record_) throw UsageError("backward: tape was not recording");
  for (Node& n : nodes_) n.grad = Tensor();
  GradRef(loss.id)[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.backward && n.grad.size() != 0) n.backward(*this, id);
  }
}

Gradients Tape::GradientsFor(const ParameterSet& set) const {
  Gradients out = ZeroGradients(set);
  for (const auto& [key, nid] : leaves_) {
    if (key.first != &set) continue;
    const Tensor& g = nodes_[nid].grad;
    if (g.size() == 0) continue;
    Tensor& dst = out.at(key.second);
    std::copy(g.values().begin(), g.values().end(), dst.values().begin());
  }
  return out;
}

Tensor Tape::GradientOf(Var v) const {
  Check(v);
  const Node& n = nodes_[v.id];
  if (n.grad.size() == 0) return Tensor({n.value().rows(), n.value().cols()});
  return n.grad;
}

}  // namespace mars
