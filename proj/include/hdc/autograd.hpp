// Copyright (c) the hdcsvc authors
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

#pragma once

// Tape-free reverse-mode differentiation over Tensor values. Each op result
// keeps its inputs and a backward closure; Var::backward() walks the graph
// in reverse topological order. With gradients disabled (NoGradGuard) ops
// record nothing and the same code serves the inference path.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hdc/tensor.hpp"

namespace hdc {

namespace detail {
struct Node;
}

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const;
  Tensor& mutable_value();
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(std::size_t i) const { return value().dim(i); }
  std::size_t numel() const { return value().numel(); }

  bool requires_grad() const noexcept;
  // Gradient accumulated by backward(); zero tensor of matching shape if none.
  const Tensor& grad() const;
  bool has_grad() const noexcept;
  void zero_grad();
  void set_requires_grad(bool on);

  // Seeds d(self)/d(self) = 1; self must hold a single element.
  void backward() const;

  detail::Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const noexcept { return node_; }

 private:
  friend Var make_op(Tensor, std::vector<Var>, std::function<void(detail::Node&)>);
  std::shared_ptr<detail::Node> node_;
};

namespace detail {
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  Tensor& grad_buffer();  // allocates zeros on first use
};
// Accumulates g into the gradient of input i when that input needs it.
void accumulate(Node& self, std::size_t i, const Tensor& g);
bool wants_grad(const Node& self, std::size_t i);
}  // namespace detail

// Builds an op result. `backward` runs with the node's gradient filled and
// pushes into its inputs through detail::accumulate.
Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(detail::Node&)> backward);

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

Var constant(Tensor value);
Var detach(const Var& x);

// ---- elementwise ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var leaky_relu(const Var& x, double slope = 0.1);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var tanh(const Var& x);
// ln(1 + e^x), evaluated without overflow.
Var softplus(const Var& x);
// max(x, bound) in the forward pass; gradient passes where x > bound or
// where the incoming gradient would raise x.
Var lower_bound(const Var& x, double bound);
// Clamped forward, identity backward.
Var clamp_ste(const Var& x, double lo, double hi);
// round(x) forward, identity backward.
Var round_ste(const Var& x);

// ---- shape ----
Var reshape(const Var& x, Shape shape);
// Concatenation along axis 0.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
// Sub-range along axis 0 or 1 (axis 1 used for kernel columns).
Var narrow(const Var& x, int axis, std::size_t begin, std::size_t count);

// ---- reductions ----
Var sum(const Var& x);
Var mean(const Var& x);
Var mse(const Var& a, const Var& b);

// ---- convolution ----
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);
Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad, int out_pad);

// ---- resampling ----
// 2x2 average pooling on [C, H, W] with even H, W.
Var avg_pool2(const Var& x);
// Backward bilinear warp: out(c, h, w) = x(c, h + flow(1,h,w), w + flow(0,h,w))
// with sample coordinates clamped to the image (edge replication).
Var bilinear_warp(const Var& x, const Var& flow);

}  // namespace hdc
