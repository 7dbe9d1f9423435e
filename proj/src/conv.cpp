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

#include "hdc/conv.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "hdc/kernels.hpp"

namespace hdc::conv {
namespace {

using simd::PhaseGeom;

PhaseGeom make_geom(int channels, int rows, int cols_needed, int stride) {
  return PhaseGeom{channels, rows, stride, (cols_needed + stride - 1) / stride};
}

void to_phase(const Tensor& x, int pad_t, int pad_l, const PhaseGeom& g, std::vector<double>& dst) {
  dst.assign(g.size(), 0.0);
  const int c = int(x.dim(0)), h = int(x.dim(1)), w = int(x.dim(2));
  const int s = g.stride;
  for (int ci = 0; ci < c; ++ci) {
    for (int r = 0; r < h; ++r) {
      const double* src = x.data() + (std::size_t(ci) * h + r) * w;
      for (int col = 0; col < w; ++col) {
        const int pc = col + pad_l;
        dst[g.row_offset(ci, r + pad_t, pc % s) + pc / s] = src[col];
      }
    }
  }
}

// out[c][h][w] += phase(c, h + off_t, w + off_l)
void from_phase_add(const std::vector<double>& src, const PhaseGeom& g, int off_t, int off_l, Tensor& out) {
  const int c = int(out.dim(0)), h = int(out.dim(1)), w = int(out.dim(2));
  const int s = g.stride;
  for (int ci = 0; ci < c; ++ci) {
    for (int r = 0; r < h; ++r) {
      double* dst = out.data() + (std::size_t(ci) * h + r) * w;
      for (int col = 0; col < w; ++col) {
        const int pc = col + off_l;
        dst[col] += src[g.row_offset(ci, r + off_t, pc % s) + pc / s];
      }
    }
  }
}

void check_conv_args(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad,
                     bool transposed) {
  if (x.rank() != 3 || weight.rank() != 4 || weight.dim(2) != weight.dim(3)) {
    throw std::invalid_argument("conv: expected [C,H,W] input and square 4-D kernel, got " +
                                shape_str(x.shape()) + " and " + shape_str(weight.shape()));
  }
  if (weight.dim(transposed ? 0 : 1) != x.dim(0)) {
    throw std::invalid_argument("conv: channel mismatch " + shape_str(x.shape()) + " vs kernel " +
                                shape_str(weight.shape()));
  }
  const std::size_t co = weight.dim(transposed ? 1 : 0);
  if (!bias.empty() && (bias.rank() != 1 || bias.dim(0) != co)) {
    throw std::invalid_argument("conv: bias shape " + shape_str(bias.shape()));
  }
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv: bad stride/pad");
}

void add_bias(Tensor& out, const Tensor& bias) {
  if (bias.empty()) return;
  const std::size_t plane = out.dim(1) * out.dim(2);
  for (std::size_t c = 0; c < out.dim(0); ++c) {
    double* p = out.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] += bias[c];
  }
}

void bias_grad(const Tensor& grad_out, Tensor* grad_bias) {
  if (!grad_bias) return;
  const std::size_t plane = grad_out.dim(1) * grad_out.dim(2);
  for (std::size_t c = 0; c < grad_out.dim(0); ++c) {
    double s = 0.0;
    const double* p = grad_out.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) s += p[i];
    (*grad_bias)[c] += s;
  }
}

}  // namespace

int conv_out_size(int in, int kernel, int stride, int pad) { return (in + 2 * pad - kernel) / stride + 1; }

int conv_transpose_out_size(int in, int kernel, int stride, int pad, int out_pad) {
  return (in - 1) * stride - 2 * pad + kernel + out_pad;
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad) {
  check_conv_args(x, weight, bias, stride, pad, false);
  const int ci = int(x.dim(0)), h = int(x.dim(1)), w = int(x.dim(2));
  const int co = int(weight.dim(0)), k = int(weight.dim(2));
  const int ho = conv_out_size(h, k, stride, pad), wo = conv_out_size(w, k, stride, pad);
  if (ho < 1 || wo < 1) throw std::invalid_argument("conv2d: input too small for kernel");
  const PhaseGeom g = make_geom(ci, std::max(h + 2 * pad, (ho - 1) * stride + k),
                                std::max(w + 2 * pad, (wo - 1) * stride + k), stride);
  std::vector<double> xph;
  to_phase(x, pad, pad, g, xph);
  Tensor out({std::size_t(co), std::size_t(ho), std::size_t(wo)});
  simd::kernels().gather(simd::GatherArgs{xph.data(), g, weight.data(), std::ptrdiff_t(ci) * k * k, k * k, k,
                                          bias.empty() ? nullptr : bias.data(), out.data(), co, ho, wo});
  return out;
}

void conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, int stride, int pad,
                     Tensor* grad_x, Tensor* grad_weight, Tensor* grad_bias) {
  const int ci = int(x.dim(0)), h = int(x.dim(1)), w = int(x.dim(2));
  const int co = int(weight.dim(0)), k = int(weight.dim(2));
  const int ho = int(grad_out.dim(1)), wo = int(grad_out.dim(2));
  const PhaseGeom g = make_geom(ci, std::max(h + 2 * pad, (ho - 1) * stride + k),
                                std::max(w + 2 * pad, (wo - 1) * stride + k), stride);
  const auto& kt = simd::kernels();
  if (grad_x) {
    std::vector<double> gph(g.size(), 0.0);
    kt.scatter(simd::ScatterArgs{grad_out.data(), co, ho, wo, weight.data(), k * k, std::ptrdiff_t(ci) * k * k, k,
                                 gph.data(), g});
    from_phase_add(gph, g, pad, pad, *grad_x);
  }
  if (grad_weight) {
    std::vector<double> xph;
    to_phase(x, pad, pad, g, xph);
    kt.weight_grad(simd::WeightGradArgs{grad_out.data(), co, ho, wo, xph.data(), g, k, grad_weight->data(),
                                        std::ptrdiff_t(ci) * k * k, k * k});
  }
  bias_grad(grad_out, grad_bias);
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad,
                        int out_pad) {
  check_conv_args(x, weight, bias, stride, pad, true);
  const int ci = int(x.dim(0)), h = int(x.dim(1)), w = int(x.dim(2));
  const int co = int(weight.dim(1)), k = int(weight.dim(2));
  const int ho = conv_transpose_out_size(h, k, stride, pad, out_pad);
  const int wo = conv_transpose_out_size(w, k, stride, pad, out_pad);
  if (ho < 1 || wo < 1) throw std::invalid_argument("conv_transpose2d: empty output");
  const PhaseGeom g = make_geom(co, std::max((h - 1) * stride + k, ho + pad),
                                std::max((w - 1) * stride + k, wo + pad), stride);
  std::vector<double> oph(g.size(), 0.0);
  simd::kernels().scatter(
      simd::ScatterArgs{x.data(), ci, h, w, weight.data(), k * k, std::ptrdiff_t(co) * k * k, k, oph.data(), g});
  Tensor out({std::size_t(co), std::size_t(ho), std::size_t(wo)});
  from_phase_add(oph, g, pad, pad, out);
  add_bias(out, bias);
  return out;
}

void conv_transpose2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, int stride,
                               int pad, Tensor* grad_x, Tensor* grad_weight, Tensor* grad_bias) {
  const int ci = int(x.dim(0)), h = int(x.dim(1)), w = int(x.dim(2));
  const int co = int(weight.dim(1)), k = int(weight.dim(2));
  const int ho = int(grad_out.dim(1)), wo = int(grad_out.dim(2));
  const PhaseGeom g = make_geom(co, std::max((h - 1) * stride + k, ho + pad),
                                std::max((w - 1) * stride + k, wo + pad), stride);
  std::vector<double> gph;
  to_phase(grad_out, pad, pad, g, gph);
  const auto& kt = simd::kernels();
  if (grad_x) {
    Tensor gx({std::size_t(ci), std::size_t(h), std::size_t(w)});
    kt.gather(simd::GatherArgs{gph.data(), g, weight.data(), std::ptrdiff_t(co) * k * k, k * k, k, nullptr,
                               gx.data(), ci, h, w});
    kt.add(grad_x->data(), gx.data(), grad_x->data(), gx.numel());
  }
  if (grad_weight) {
    kt.weight_grad(simd::WeightGradArgs{x.data(), ci, h, w, gph.data(), g, k, grad_weight->data(),
                                        std::ptrdiff_t(co) * k * k, k * k});
  }
  bias_grad(grad_out, grad_bias);
}

}  // namespace hdc::conv
