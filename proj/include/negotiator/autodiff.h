// Copyright 2026 The Negotiator Authors
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

#ifndef NEGOTIATOR_AUTODIFF_H_
#define NEGOTIATOR_AUTODIFF_H_

// Reverse-mode automatic differentiation over dense double tensors.
//
// Every op evaluates eagerly. When gradient recording is enabled and some
// input requires a gradient, the result keeps references to its inputs and a
// backward rule; the recorded graph is the tape. Nodes are numbered at
// creation, so creation order is a topological order and Backward() walks the
// reachable nodes by decreasing number, visiting each once.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "negotiator/tensor.h"

namespace negotiator {

struct Node {
  Tensor value;
  Tensor grad;  // Empty shape and zero until first accumulation.
  bool has_grad = false;
  bool requires_grad = false;
  bool is_leaf = true;
  uint64_t id = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  // Zero-initialized on first use.
  Tensor& MutableGrad();
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  // Zeros if no gradient has been accumulated yet.
  Tensor grad() const;
  bool requires_grad() const { return node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }
  size_t size() const { return node_->value.size(); }
  double item() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

bool GradEnabled();

// Disables recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

Var Constant(Tensor t);
// A leaf that accumulates gradients; parameters are built from these.
Var Leaf(Tensor t);

Var MatVec(const Var& w, const Var& x);  // (m, n) x (n) -> (m)
Var VecMat(const Var& x, const Var& w);  // (m) x (m, n) -> (n)
Var MatMul(const Var& a, const Var& b);  // (m, k) x (k, n) -> (m, n)
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& a, double factor);
Var AddN(std::span<const Var> terms);  // Same-shaped inputs.
Var Concat(std::span<const Var> parts);  // Rank-0 or rank-1 inputs.
Var Concat(const Var& a, const Var& b);
Var Slice(const Var& a, int begin, int length);  // Rank-1.
Var Stack(std::span<const Var> rows);            // Rank-1 rows -> rank 2.
Var Sigmoid(const Var& a);
Var Tanh(const Var& a);
Var Log(const Var& a);
Var Softmax(const Var& a);     // Rank-1, non-empty.
Var LogSoftmax(const Var& a);  // Rank-1, non-empty.
Var Sum(const Var& a);         // -> scalar
Var Dot(const Var& a, const Var& b);
Var Gather(const Var& table, int row);  // Row of a rank-2 table.
Var Pick(const Var& a, int index);      // Element as a scalar.

struct GruWeights {
  Var w_z, u_z, b_z;
  Var w_r, u_r, b_r;
  Var w_h, u_h, b_h;
};

// z = sig(W_z x + U_z h + b_z), r = sig(W_r x + U_r h + b_r),
// c = tanh(W_h x + U_h (r * h) + b_h), h' = (1 - z) * h + z * c.
// One tape node with a hand-derived backward rule.
Var GruCell(const GruWeights& p, const Var& h_prev, const Var& x);

// Accumulates d(loss)/d(leaf) into every reachable leaf requiring a gradient.
// Throws std::invalid_argument unless `loss` holds exactly one value.
void Backward(const Var& loss);

}  // namespace negotiator

#endif  // NEGOTIATOR_AUTODIFF_H_
