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

#include "hdc/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "hdc/conv.hpp"
#include "hdc/kernels.hpp"

namespace hdc {

namespace {
thread_local bool g_grad_enabled = true;

void require_same(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

template <class F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.shape());
  const double* src = x.data();
  double* dst = out.data();
  for (std::size_t i = 0; i < x.numel(); ++i) dst[i] = f(src[i]);
  return out;
}

double softplus_scalar(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

// ---------------------------------------------------------------------------
// Var / Node

Tensor& detail::Node::grad_buffer() {
  if (grad.empty() && !value.empty()) grad = Tensor(value.shape());
  return grad;
}

bool detail::wants_grad(const Node& self, std::size_t i) { return self.inputs[i]->requires_grad; }

void detail::accumulate(Node& self, std::size_t i, const Tensor& g) {
  Node& in = *self.inputs[i];
  if (!in.requires_grad) return;
  Tensor& buf = in.grad_buffer();
  if (buf.numel() != g.numel()) throw std::logic_error("accumulate: gradient shape mismatch");
  simd::kernels().add(buf.data(), g.data(), buf.data(), g.numel());
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

const Tensor& Var::value() const {
  if (!node_) throw std::logic_error("Var: undefined");
  return node_->value;
}

Tensor& Var::mutable_value() {
  if (!node_) throw std::logic_error("Var: undefined");
  return node_->value;
}

bool Var::requires_grad() const noexcept { return node_ && node_->requires_grad; }

const Tensor& Var::grad() const { return node_->grad_buffer(); }

bool Var::has_grad() const noexcept { return node_ && !node_->grad.empty(); }

void Var::zero_grad() {
  if (node_) node_->grad = Tensor();
}

void Var::set_requires_grad(bool on) { node_->requires_grad = on; }

void Var::backward() const {
  if (!node_ || !node_->requires_grad) return;
  if (node_->value.numel() != 1) throw std::invalid_argument("backward: root must be a scalar");
  // Iterative post-order DFS gives a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      detail::Node* child = n->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
  // Interior gradients are not needed after the sweep; leaves keep theirs.
  for (detail::Node* n : order) {
    if (n->backward_fn && n != node_.get()) n->grad = Tensor();
  }
}

Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(detail::Node&)> backward) {
  Var out;
  out.node_ = std::make_shared<detail::Node>();
  out.node_->value = std::move(value);
  bool any = false;
  if (g_grad_enabled) {
    for (const auto& v : inputs) any = any || v.requires_grad();
  }
  if (any) {
    out.node_->requires_grad = true;
    out.node_->inputs.reserve(inputs.size());
    for (auto& v : inputs) out.node_->inputs.push_back(v.node_ptr());
    out.node_->backward_fn = std::move(backward);
  }
  return out;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Var constant(Tensor value) { return Var(std::move(value), false); }

Var detach(const Var& x) { return Var(x.value(), false); }

// ---------------------------------------------------------------------------
// elementwise

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  Tensor out(a.shape());
  simd::kernels().add(a.value().data(), b.value().data(), out.data(), out.numel());
  return make_op(std::move(out), {a, b}, [](detail::Node& n) {
    detail::accumulate(n, 0, n.grad);
    detail::accumulate(n, 1, n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_op(std::move(out), {a, b}, [](detail::Node& n) {
    detail::accumulate(n, 0, n.grad);
    if (detail::wants_grad(n, 1)) detail::accumulate(n, 1, map(n.grad, [](double g) { return -g; }));
  });
}

Var mul(const Var& a, const Var& b) {
  require_same(a, b, "mul");
  Tensor out(a.shape());
  simd::kernels().mul(a.value().data(), b.value().data(), out.data(), out.numel());
  return make_op(std::move(out), {a, b}, [](detail::Node& n) {
    const auto& kt = simd::kernels();
    for (std::size_t i = 0; i < 2; ++i) {
      if (!detail::wants_grad(n, i)) continue;
      Tensor g(n.grad.shape());
      kt.mul(n.grad.data(), n.inputs[1 - i]->value.data(), g.data(), g.numel());
      detail::accumulate(n, i, g);
    }
  });
}

Var scale(const Var& a, double s) {
  return make_op(map(a.value(), [s](double v) { return v * s; }), {a}, [s](detail::Node& n) {
    detail::accumulate(n, 0, map(n.grad, [s](double g) { return g * s; }));
  });
}

Var add_scalar(const Var& a, double s) {
  return make_op(map(a.value(), [s](double v) { return v + s; }), {a},
                 [](detail::Node& n) { detail::accumulate(n, 0, n.grad); });
}

namespace {
// Unary op whose derivative is a function of (input, output).
template <class F, class D>
Var unary(const Var& x, F f, D df) {
  return make_op(map(x.value(), f), {x}, [df](detail::Node& n) {
    const Tensor& in = n.inputs[0]->value;
    Tensor g(n.grad.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] = n.grad[i] * df(in[i], n.value[i]);
    detail::accumulate(n, 0, g);
  });
}
}  // namespace

Var leaky_relu(const Var& x, double slope) {
  return unary(
      x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Var relu(const Var& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); }, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var softplus(const Var& x) {
  return unary(x, softplus_scalar, [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

Var lower_bound(const Var& x, double bound) {
  return make_op(map(x.value(), [bound](double v) { return std::max(v, bound); }), {x}, [bound](detail::Node& n) {
    const Tensor& in = n.inputs[0]->value;
    Tensor g(n.grad.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) {
      g[i] = (in[i] >= bound || n.grad[i] < 0.0) ? n.grad[i] : 0.0;
    }
    detail::accumulate(n, 0, g);
  });
}

Var clamp_ste(const Var& x, double lo, double hi) {
  return make_op(map(x.value(), [lo, hi](double v) { return std::clamp(v, lo, hi); }), {x},
                 [](detail::Node& n) { detail::accumulate(n, 0, n.grad); });
}

Var round_ste(const Var& x) {
  return make_op(map(x.value(), [](double v) { return std::round(v); }), {x},
                 [](detail::Node& n) { detail::accumulate(n, 0, n.grad); });
}

// ---------------------------------------------------------------------------
// shape

Var reshape(const Var& x, Shape shape) {
  Shape original = x.shape();
  return make_op(x.value().reshaped(std::move(shape)), {x}, [original](detail::Node& n) {
    detail::accumulate(n, 0, n.grad.reshaped(original));
  });
}

Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  Shape shape = parts[0].shape();
  std::size_t lead = 0;
  const std::size_t inner = parts[0].numel() / std::max<std::size_t>(parts[0].dim(0), 1);
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.value().rank() != shape.size() || !std::equal(shape.begin() + 1, shape.end(), p.shape().begin() + 1)) {
      throw std::invalid_argument("concat: trailing shape mismatch " + shape_str(p.shape()) + " vs " +
                                  shape_str(shape));
    }
    offsets.push_back(lead * inner);
    lead += p.dim(0);
  }
  shape[0] = lead;
  std::vector<double> data;
  data.reserve(lead * inner);
  for (const auto& p : parts) data.insert(data.end(), p.value().values().begin(), p.value().values().end());
  std::vector<Var> inputs(parts.begin(), parts.end());
  return make_op(Tensor(shape, std::move(data)), inputs, [offsets](detail::Node& n) {
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      if (!detail::wants_grad(n, i)) continue;
      const Tensor& v = n.inputs[i]->value;
      std::vector<double> g(n.grad.data() + offsets[i], n.grad.data() + offsets[i] + v.numel());
      detail::accumulate(n, i, Tensor(v.shape(), std::move(g)));
    }
  });
}

Var narrow(const Var& x, int axis, std::size_t begin, std::size_t count) {
  const Tensor& v = x.value();
  if (axis < 0 || std::size_t(axis) >= v.rank() || begin + count > v.dim(axis) || axis > 1) {
    throw std::invalid_argument("narrow: bad range on " + shape_str(v.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= v.dim(i);
  for (std::size_t i = axis + 1; i < v.rank(); ++i) inner *= v.dim(i);
  const std::size_t extent = v.dim(axis);
  Shape shape = v.shape();
  shape[axis] = count;
  Tensor out(shape);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(v.data() + (o * extent + begin) * inner, count * inner, out.data() + o * count * inner);
  }
  return make_op(std::move(out), {x}, [outer, inner, extent, begin, count](detail::Node& n) {
    Tensor g(n.inputs[0]->value.shape());
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(n.grad.data() + o * count * inner, count * inner, g.data() + (o * extent + begin) * inner);
    }
    detail::accumulate(n, 0, g);
  });
}

// ---------------------------------------------------------------------------
// reductions

Var sum(const Var& x) {
  return make_op(Tensor::scalar(x.value().sum()), {x}, [](detail::Node& n) {
    detail::accumulate(n, 0, Tensor(n.inputs[0]->value.shape(), n.grad[0]));
  });
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / double(x.numel())); }

Var mse(const Var& a, const Var& b) {
  require_same(a, b, "mse");
  const std::size_t count = a.numel();
  double s = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = a.value()[i] - b.value()[i];
    s += d * d;
  }
  return make_op(Tensor::scalar(s / double(count)), {a, b}, [count](detail::Node& n) {
    const Tensor& av = n.inputs[0]->value;
    const Tensor& bv = n.inputs[1]->value;
    Tensor g(av.shape());
    const double k = 2.0 * n.grad[0] / double(count);
    for (std::size_t i = 0; i < count; ++i) g[i] = k * (av[i] - bv[i]);
    detail::accumulate(n, 0, g);
    if (detail::wants_grad(n, 1)) detail::accumulate(n, 1, map(g, [](double v) { return -v; }));
  });
}

// ---------------------------------------------------------------------------
// convolution

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
  const Tensor no_bias;
  Tensor out = conv::conv2d(x.value(), weight.value(), bias.defined() ? bias.value() : no_bias, stride, pad);
  std::vector<Var> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_op(std::move(out), inputs, [stride, pad](detail::Node& n) {
    const Tensor& xv = n.inputs[0]->value;
    const Tensor& wv = n.inputs[1]->value;
    Tensor* gx = detail::wants_grad(n, 0) ? &n.inputs[0]->grad_buffer() : nullptr;
    Tensor* gw = detail::wants_grad(n, 1) ? &n.inputs[1]->grad_buffer() : nullptr;
    Tensor* gb = (n.inputs.size() > 2 && detail::wants_grad(n, 2)) ? &n.inputs[2]->grad_buffer() : nullptr;
    conv::conv2d_backward(xv, wv, n.grad, stride, pad, gx, gw, gb);
  });
}

Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad, int out_pad) {
  const Tensor no_bias;
  Tensor out = conv::conv_transpose2d(x.value(), weight.value(), bias.defined() ? bias.value() : no_bias, stride,
                                      pad, out_pad);
  std::vector<Var> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_op(std::move(out), inputs, [stride, pad](detail::Node& n) {
    const Tensor& xv = n.inputs[0]->value;
    const Tensor& wv = n.inputs[1]->value;
    Tensor* gx = detail::wants_grad(n, 0) ? &n.inputs[0]->grad_buffer() : nullptr;
    Tensor* gw = detail::wants_grad(n, 1) ? &n.inputs[1]->grad_buffer() : nullptr;
    Tensor* gb = (n.inputs.size() > 2 && detail::wants_grad(n, 2)) ? &n.inputs[2]->grad_buffer() : nullptr;
    conv::conv_transpose2d_backward(xv, wv, n.grad, stride, pad, gx, gw, gb);
  });
}

// ---------------------------------------------------------------------------
// resampling

Var avg_pool2(const Var& x) {
  const Tensor& v = x.value();
  if (v.rank() != 3 || v.dim(1) % 2 || v.dim(2) % 2) {
    throw std::invalid_argument("avg_pool2: need [C, even H, even W], got " + shape_str(v.shape()));
  }
  const std::size_t c = v.dim(0), h = v.dim(1) / 2, w = v.dim(2) / 2;
  Tensor out({c, h, w});
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j)
        out.at(k, i, j) =
            0.25 * (v.at(k, 2 * i, 2 * j) + v.at(k, 2 * i, 2 * j + 1) + v.at(k, 2 * i + 1, 2 * j) +
                    v.at(k, 2 * i + 1, 2 * j + 1));
  return make_op(std::move(out), {x}, [c, h, w](detail::Node& n) {
    Tensor g(n.inputs[0]->value.shape());
    for (std::size_t k = 0; k < c; ++k)
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
          const double q = 0.25 * n.grad.at(k, i, j);
          g.at(k, 2 * i, 2 * j) = q;
          g.at(k, 2 * i, 2 * j + 1) = q;
          g.at(k, 2 * i + 1, 2 * j) = q;
          g.at(k, 2 * i + 1, 2 * j + 1) = q;
        }
    detail::accumulate(n, 0, g);
  });
}

namespace {
struct Tap {
  std::size_t y0, y1, x0, x1;
  double ay, ax;
  bool clamped_y, clamped_x;
};

Tap bilinear_tap(double py, double px, std::size_t h, std::size_t w) {
  Tap t{};
  const double maxy = double(h - 1), maxx = double(w - 1);
  t.clamped_y = py < 0.0 || py > maxy;
  t.clamped_x = px < 0.0 || px > maxx;
  py = std::clamp(py, 0.0, maxy);
  px = std::clamp(px, 0.0, maxx);
  const double fy = std::floor(py), fx = std::floor(px);
  t.y0 = std::size_t(fy);
  t.x0 = std::size_t(fx);
  t.y1 = std::min(t.y0 + 1, h - 1);
  t.x1 = std::min(t.x0 + 1, w - 1);
  t.ay = py - fy;
  t.ax = px - fx;
  return t;
}
}  // namespace

Var bilinear_warp(const Var& x, const Var& flow) {
  const Tensor& v = x.value();
  const Tensor& f = flow.value();
  if (v.rank() != 3 || f.rank() != 3 || f.dim(0) != 2 || f.dim(1) != v.dim(1) || f.dim(2) != v.dim(2)) {
    throw std::invalid_argument("bilinear_warp: features " + shape_str(v.shape()) + " flow " +
                                shape_str(f.shape()));
  }
  const std::size_t c = v.dim(0), h = v.dim(1), w = v.dim(2);
  Tensor out({c, h, w});
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const Tap t = bilinear_tap(double(i) + f.at(1, i, j), double(j) + f.at(0, i, j), h, w);
      for (std::size_t k = 0; k < c; ++k) {
        const double top = (1.0 - t.ax) * v.at(k, t.y0, t.x0) + t.ax * v.at(k, t.y0, t.x1);
        const double bot = (1.0 - t.ax) * v.at(k, t.y1, t.x0) + t.ax * v.at(k, t.y1, t.x1);
        out.at(k, i, j) = (1.0 - t.ay) * top + t.ay * bot;
      }
    }
  }
  return make_op(std::move(out), {x, flow}, [c, h, w](detail::Node& n) {
    const Tensor& v = n.inputs[0]->value;
    const Tensor& f = n.inputs[1]->value;
    const bool gx_on = detail::wants_grad(n, 0), gf_on = detail::wants_grad(n, 1);
    Tensor gx(v.shape()), gf(f.shape());
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const Tap t = bilinear_tap(double(i) + f.at(1, i, j), double(j) + f.at(0, i, j), h, w);
        double dpy = 0.0, dpx = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
          const double g = n.grad.at(k, i, j);
          if (g == 0.0) continue;
          if (gx_on) {
            gx.at(k, t.y0, t.x0) += g * (1.0 - t.ay) * (1.0 - t.ax);
            gx.at(k, t.y0, t.x1) += g * (1.0 - t.ay) * t.ax;
            gx.at(k, t.y1, t.x0) += g * t.ay * (1.0 - t.ax);
            gx.at(k, t.y1, t.x1) += g * t.ay * t.ax;
          }
          const double v00 = v.at(k, t.y0, t.x0), v01 = v.at(k, t.y0, t.x1);
          const double v10 = v.at(k, t.y1, t.x0), v11 = v.at(k, t.y1, t.x1);
          dpx += g * ((1.0 - t.ay) * (v01 - v00) + t.ay * (v11 - v10));
          dpy += g * ((1.0 - t.ax) * (v10 - v00) + t.ax * (v11 - v01));
        }
        if (gf_on) {
          gf.at(0, i, j) = t.clamped_x ? 0.0 : dpx;
          gf.at(1, i, j) = t.clamped_y ? 0.0 : dpy;
        }
      }
    }
    if (gx_on) detail::accumulate(n, 0, gx);
    if (gf_on) detail::accumulate(n, 1, gf);
  });
}

}  // namespace hdc
