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

#include "hdc/codec/motion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hdc::codec {

Tensor luma(const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3) throw std::invalid_argument("luma: expected [3,H,W]");
  const std::size_t n = rgb.dim(1) * rgb.dim(2);
  Tensor y({rgb.dim(1), rgb.dim(2)});
  for (std::size_t i = 0; i < n; ++i) y[i] = 0.2126 * rgb[i] + 0.7152 * rgb[n + i] + 0.0722 * rgb[2 * n + i];
  return y;
}

Tensor warp(const Tensor& x, const Tensor& flow) {
  NoGradGuard ng;
  return bilinear_warp(constant(x), constant(flow)).value();
}

namespace {

Tensor downsample(const Tensor& img) {
  const std::size_t h = img.dim(0) / 2, w = img.dim(1) / 2;
  Tensor out({h, w});
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t r = 2 * i * img.dim(1) + 2 * j;
      out[i * w + j] = 0.25 * (img[r] + img[r + 1] + img[r + img.dim(1)] + img[r + img.dim(1) + 1]);
    }
  return out;
}

Tensor upsample_flow(const Tensor& f, std::size_t h, std::size_t w) {
  Tensor out({2, h, w});
  const std::size_t fh = f.dim(1), fw = f.dim(2);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        out[(c * h + i) * w + j] = 2.0 * f[(c * fh + std::min(i / 2, fh - 1)) * fw + std::min(j / 2, fw - 1)];
      }
  return out;
}

void lk_level(const Tensor& cur, const Tensor& ref, Tensor& flow, int iterations) {
  const int h = int(cur.dim(0)), w = int(cur.dim(1));
  constexpr int kRadius = 2;
  constexpr double kReg = 1e-4;
  const std::size_t n = std::size_t(h) * std::size_t(w);
  for (int it = 0; it < iterations; ++it) {
    const Tensor warped = warp(ref.reshaped({1, cur.dim(0), cur.dim(1)}), flow).reshaped({cur.dim(0), cur.dim(1)});
    Tensor ix({n}), iy({n}), itd({n});
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        auto at = [&](int rr, int cc) {
          return warped[std::size_t(std::clamp(rr, 0, h - 1)) * w + std::size_t(std::clamp(cc, 0, w - 1))];
        };
        const std::size_t i = std::size_t(r) * w + c;
        ix[i] = 0.5 * (at(r, c + 1) - at(r, c - 1));
        iy[i] = 0.5 * (at(r + 1, c) - at(r - 1, c));
        itd[i] = warped[i] - cur[i];
      }
    Tensor next = flow;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        double sxx = kReg, sxy = 0, syy = kReg, sxt = 0, syt = 0;
        for (int dr = -kRadius; dr <= kRadius; ++dr)
          for (int dc = -kRadius; dc <= kRadius; ++dc) {
            const int rr = std::clamp(r + dr, 0, h - 1), cc = std::clamp(c + dc, 0, w - 1);
            const std::size_t i = std::size_t(rr) * w + cc;
            sxx += ix[i] * ix[i];
            sxy += ix[i] * iy[i];
            syy += iy[i] * iy[i];
            sxt += ix[i] * itd[i];
            syt += iy[i] * itd[i];
          }
        const double det = sxx * syy - sxy * sxy;
        double du = (-syy * sxt + sxy * syt) / det;
        double dv = (sxy * sxt - sxx * syt) / det;
        du = std::clamp(du, -1.0, 1.0);
        dv = std::clamp(dv, -1.0, 1.0);
        const std::size_t i = std::size_t(r) * w + c;
        next[i] += du;
        next[n + i] += dv;
      }
    flow = std::move(next);
  }
}

}  // namespace

Tensor lucas_kanade(const Tensor& cur, const Tensor& ref, int levels, int iterations) {
  if (cur.rank() != 2 || !cur.same_shape(ref)) throw std::invalid_argument("lucas_kanade: expected two [H,W] images");
  std::vector<Tensor> pc{cur}, pr{ref};
  for (int l = 1; l < levels; ++l) {
    if (pc.back().dim(0) % 2 || pc.back().dim(1) % 2 || pc.back().dim(0) < 8 || pc.back().dim(1) < 8) break;
    pc.push_back(downsample(pc.back()));
    pr.push_back(downsample(pr.back()));
  }
  Tensor flow({2, pc.back().dim(0), pc.back().dim(1)});
  for (int l = int(pc.size()) - 1; l >= 0; --l) {
    if (flow.dim(1) != pc[std::size_t(l)].dim(0)) flow = upsample_flow(flow, pc[std::size_t(l)].dim(0), pc[std::size_t(l)].dim(1));
    lk_level(pc[std::size_t(l)], pr[std::size_t(l)], flow, iterations);
  }
  return flow;
}

MotionEstimator::MotionEstimator(nn::ParamStore& store, const std::string& name, int hidden, int levels,
                                 int iterations)
    : levels_(levels), iterations_(iterations) {
  head1_ = nn::Conv2d(store, name + ".head1", 8, hidden, 3, 1);
  head2_ = nn::Conv2d(store, name + ".head2", hidden, 2, 3, 1, nn::Init::kZero);
}

Tensor MotionEstimator::initial_flow(const Tensor& cur, const Tensor& ref) const {
  return lucas_kanade(luma(cur), luma(ref), levels_, iterations_);
}

Var MotionEstimator::operator()(const Var& cur, const Var& ref) const {
  const Var init = constant(initial_flow(cur.value(), ref.value()));
  const Var aligned = bilinear_warp(detach(ref), init);
  const Var residual = head2_(leaky_relu(head1_(concat({detach(cur), aligned, init}))));
  return add(init, residual);
}

}  // namespace hdc::codec
