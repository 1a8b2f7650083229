/* Copyright 2026 The BiL-CTC Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef BILCTC_NN_TAPE_HPP_
#define BILCTC_NN_TAPE_HPP_

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bilctc/common.hpp"
#include "bilctc/nn/parameters.hpp"

namespace bilctc::nn {

// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
// order; Backward() walks them in reverse and finally accumulates into the
// gradients of the Parameters that were read.
template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;
  // Receives the tape and the node's own handle; reads grad(self).
  using BackwardFn = std::function<void(Tape&, Var self)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  // Rejects non-finite node values as they are produced.
  void set_check_finite(bool on) { check_finite_ = on; }

  Var Constant(Mat value) { return Emplace(std::move(value), nullptr, false, {}); }

  Var Param(Parameter<Scalar>& p) {
    Node node;
    node.external = &p.value;
    node.param = &p;
    node.needs_grad = grad_enabled_;
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  // Appends a computed node. `fn` is kept only if some input needs a gradient.
  Var Push(Mat value, std::initializer_list<Var> inputs, BackwardFn fn) {
    bool needs = false;
    for (Var v : inputs) needs = needs || nodes_[v.id].needs_grad;
    return Emplace(std::move(value), nullptr, needs, needs ? std::move(fn) : BackwardFn{});
  }
  Var Push(Mat value, const std::vector<Var>& inputs, BackwardFn fn) {
    bool needs = false;
    for (Var v : inputs) needs = needs || nodes_[v.id].needs_grad;
    return Emplace(std::move(value), nullptr, needs, needs ? std::move(fn) : BackwardFn{});
  }

  const Mat& value(Var v) const {
    const Node& n = nodes_[v.id];
    return n.external ? *n.external : n.value;
  }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  // Gradient of the root with respect to v; zero-filled on first access.
  Mat& grad(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.size() == 0) {
      const Mat& val = value(v);
      n.grad = Mat::Zero(val.rows(), val.cols());
    }
    return n.grad;
  }

  template <typename Expr>
  void AddGrad(Var v, const Expr& g) {
    if (!nodes_[v.id].needs_grad) return;
    grad(v) += g;
  }

  // Seeds d(root)/d(root) = scale; root must be 1x1.
  void Backward(Var root, Scalar scale = Scalar(1)) {
    if (value(root).size() != 1) {
      Fail(ErrorKind::kUsage, "Backward() needs a scalar root");
    }
    if (!nodes_[root.id].needs_grad) return;
    grad(root)(0, 0) += scale;
    for (int i = root.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.grad.size() == 0) continue;
      if (n.backward) n.backward(*this, Var{i});
      if (n.param) n.param->grad += n.grad;
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    const Mat* external = nullptr;
    Parameter<Scalar>* param = nullptr;
    Mat grad;
    bool needs_grad = false;
    BackwardFn backward;
  };

  Var Emplace(Mat value, const Mat* external, bool needs, BackwardFn fn) {
    if (check_finite_ && !value.allFinite()) {
      Fail(ErrorKind::kNumeric,
           "non-finite value produced at tape node " + std::to_string(nodes_.size()));
    }
    Node node;
    node.value = std::move(value);
    node.external = external;
    node.needs_grad = needs && grad_enabled_;
    node.backward = std::move(fn);
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  bool grad_enabled_ = true;
  bool check_finite_ = false;
};

}  // namespace bilctc::nn

#endif  // BILCTC_NN_TAPE_HPP_
