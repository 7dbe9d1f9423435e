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

#include "hdc/hdc_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hdc {

namespace hdc_ops {

Var shift_volume(const Var& k, ShiftSign sign, int max_disparity, int first_shift) {
  const Tensor& x = k.value();
  if (max_disparity < 1) throw std::invalid_argument("shift_volume: max disparity must be >= 1");
  if (x.rank() != 3) throw std::invalid_argument("shift_volume: expected [C,H,W], got " + shape_str(x.shape()));
  const int c = int(x.dim(0)), h = int(x.dim(1)), w = int(x.dim(2));
  const int dir = sign == ShiftSign::kPlus ? 1 : -1;
  Tensor out({std::size_t(max_disparity), std::size_t(c), std::size_t(h), std::size_t(w)});
  for (int d = 0; d < max_disparity; ++d) {
    const int off = dir * (first_shift + d);
    const int lo = std::max(0, -off), hi = std::min(w, w - off);
    for (int ci = 0; ci < c; ++ci) {
      for (int r = 0; r < h; ++r) {
        const double* src = x.data() + (std::size_t(ci) * h + r) * w;
        double* dst = &out.at(d, ci, r, 0);
        for (int col = lo; col < hi; ++col) dst[col] = src[col + off];
      }
    }
  }
  return make_op(std::move(out), {k}, [c, h, w, dir, first_shift, max_disparity](detail::Node& n) {
    Tensor g({std::size_t(c), std::size_t(h), std::size_t(w)});
    for (int d = 0; d < max_disparity; ++d) {
      const int off = dir * (first_shift + d);
      const int lo = std::max(0, -off), hi = std::min(w, w - off);
      for (int ci = 0; ci < c; ++ci) {
        for (int r = 0; r < h; ++r) {
          const double* src = &n.grad.at(d, ci, r, 0);
          double* dst = g.data() + (std::size_t(ci) * h + r) * w;
          for (int col = lo; col < hi; ++col) dst[col + off] += src[col];
        }
      }
    }
    detail::accumulate(n, 0, g);
  });
}

Var similarity(const Var& vl, const Var& vr) {
  if (vl.shape() != vr.shape()) {
    throw std::invalid_argument("similarity_map: shape mismatch " + shape_str(vl.shape()) + " vs " +
                                shape_str(vr.shape()));
  }
  return mul(vl, vr);
}

Var attention_score(const Var& f) {
  // Saturates at the representable neighbours of 0 and 1 so the score stays
  // strictly inside (0, 1) even where tanh(softplus(x)) rounds to an endpoint.
  constexpr double kLo = std::numeric_limits<double>::denorm_min();
  const double kHi = std::nextafter(1.0, 0.0);
  const Tensor& x = f.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double sp = std::max(x[i], 0.0) + std::log1p(std::exp(-std::abs(x[i])));
    out[i] = std::clamp(std::tanh(sp), kLo, kHi);
  }
  return make_op(std::move(out), {f}, [](detail::Node& n) {
    const Tensor& x = n.inputs[0]->value;
    Tensor g(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) {
      const double sp = std::max(x[i], 0.0) + std::log1p(std::exp(-std::abs(x[i])));
      const double t = std::tanh(sp);
      g[i] = n.grad[i] * (1.0 - t * t) / (1.0 + std::exp(-x[i]));
    }
    detail::accumulate(n, 0, g);
  });
}

Var aggregate(const Var& f_star, const Var& v, const Var& weight, const Var& bias) {
  const Shape& vs = v.shape();
  if (vs.size() != 4) throw std::invalid_argument("aggregate: expected [D,C,H,W] volume");
  if (f_star.defined() && f_star.shape() != vs) {
    throw std::invalid_argument("aggregate: score " + shape_str(f_star.shape()) + " vs volume " + shape_str(vs));
  }
  const Shape& ws = weight.shape();
  if (ws.size() != 4 || ws[1] != vs[0] * vs[1] || ws[2] != 3 || ws[3] != 3) {
    throw std::invalid_argument("aggregate: params " + shape_str(ws) + " incompatible with volume " + shape_str(vs));
  }
  Var weighted = f_star.defined() ? mul(f_star, v) : v;
  Var flat = reshape(weighted, {vs[0] * vs[1], vs[2], vs[3]});
  return conv2d(flat, weight, bias, 1, 1);
}

}  // namespace hdc_ops

namespace {
void require_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw std::invalid_argument(std::string(op) + ": non-finite input");
}
}  // namespace

DisparityVolume build_shift_volume(const FeatureMap& k, ShiftSign sign, int max_disparity) {
  require_finite(k.data, "build_shift_volume");
  NoGradGuard no_grad;
  return {hdc_ops::shift_volume(constant(k.data), sign, max_disparity).value()};
}

DisparityVolume similarity_map(const DisparityVolume& vl, const DisparityVolume& vr) {
  NoGradGuard no_grad;
  return {hdc_ops::similarity(constant(vl.data), constant(vr.data)).value()};
}

DisparityVolume normalize_score(const DisparityVolume& f) {
  require_finite(f.data, "normalize_score");
  NoGradGuard no_grad;
  return {hdc_ops::attention_score(constant(f.data)).value()};
}

FeatureMap aggregate(const DisparityVolume& f_star, const DisparityVolume& v, const AggregatorParams& params) {
  NoGradGuard no_grad;
  Var out = hdc_ops::aggregate(constant(f_star.data), constant(v.data), constant(params.weight),
                               params.bias.empty() ? Var() : constant(params.bias));
  return {out.value(), View::kLeft, 1};
}

}  // namespace hdc
