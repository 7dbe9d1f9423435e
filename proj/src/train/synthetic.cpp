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

#include "hdc/train/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hdc::train {

namespace {

// One octave of value noise: a random lattice every `cell` pixels,
// bilinearly interpolated.
void add_octave(std::mt19937_64& rng, Tensor& t, std::size_t cell, double amp) {
  const std::size_t h = t.dim(1), w = t.dim(2);
  const std::size_t gh = h / cell + 2, gw = w / cell + 2;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> g(gh * gw);
    for (auto& v : g) v = u(rng);
    for (std::size_t i = 0; i < h; ++i) {
      const double fy = double(i) / double(cell);
      const std::size_t y0 = std::size_t(fy);
      const double ay = fy - double(y0);
      for (std::size_t j = 0; j < w; ++j) {
        const double fx = double(j) / double(cell);
        const std::size_t x0 = std::size_t(fx);
        const double ax = fx - double(x0);
        const double v = (1 - ay) * ((1 - ax) * g[y0 * gw + x0] + ax * g[y0 * gw + x0 + 1]) +
                         ay * ((1 - ax) * g[(y0 + 1) * gw + x0] + ax * g[(y0 + 1) * gw + x0 + 1]);
        t.at(c, i, j) += amp * v;
      }
    }
  }
}

}  // namespace

Tensor value_noise_texture(std::mt19937_64& rng, std::size_t h, std::size_t w) {
  Tensor t({3, h, w}, 0.0);
  add_octave(rng, t, 16, 0.30);
  add_octave(rng, t, 8, 0.15);
  add_octave(rng, t, 4, 0.08);
  std::uniform_real_distribution<double> base(0.3, 0.7);
  for (std::size_t c = 0; c < 3; ++c) {
    const double b = base(rng);
    for (std::size_t i = 0; i < h * w; ++i) {
      double& v = t[c * h * w + i];
      v = std::clamp(b + v, 0.0, 1.0);
    }
  }
  return t;
}

SyntheticClip synthetic_clip(std::mt19937_64& rng, const SyntheticOptions& opt) {
  if (opt.height == 0 || opt.width == 0 || opt.frames == 0) throw std::invalid_argument("synthetic_clip: empty size");
  if (opt.max_disparity < 1 || opt.max_motion < 0) throw std::invalid_argument("synthetic_clip: bad ranges");
  SyntheticClip clip;
  std::uniform_int_distribution<int> dfg(1, opt.max_disparity), mv(-opt.max_motion, opt.max_motion);
  clip.disparity_fg = dfg(rng);
  clip.disparity_bg = std::uniform_int_distribution<int>(0, clip.disparity_fg - 1)(rng);
  clip.motion_x = mv(rng);
  clip.motion_y = mv(rng);

  const std::size_t h = opt.height, w = opt.width;
  const long m = 2 * long(opt.max_motion) * long(opt.frames) + opt.max_disparity + 1;
  const std::size_t th = h + 2 * std::size_t(m), tw = w + 2 * std::size_t(m);
  const Tensor bg = value_noise_texture(rng, th, tw);
  const Tensor fg = value_noise_texture(rng, th, tw);

  // Foreground rectangle in left-view coordinates at t = 0; it moves twice
  // as fast as the background.
  std::uniform_int_distribution<std::size_t> rh(h / 4, h / 2), rw(w / 4, w / 2);
  const long fh = long(rh(rng)), fw = long(rw(rng));
  const long fy = long(std::uniform_int_distribution<std::size_t>(0, h - std::size_t(fh))(rng));
  const long fx = long(std::uniform_int_distribution<std::size_t>(0, w - std::size_t(fw))(rng));

  // Pixel (i, j) of the view that sees left-view column j + shift_fg / shift_bg.
  auto render = [&](long t, long shift_fg, long shift_bg, Tensor& out) {
    const long my = t * clip.motion_y, mx = t * clip.motion_x;
    for (long i = 0; i < long(h); ++i)
      for (long j = 0; j < long(w); ++j) {
        const long oy = i - 2 * my, ox = j + shift_fg - 2 * mx;
        const bool in_fg = oy >= fy && oy < fy + fh && ox >= fx && ox < fx + fw;
        for (std::size_t c = 0; c < 3; ++c) {
          out.at(c, std::size_t(i), std::size_t(j)) =
              in_fg ? fg.at(c, std::size_t(oy + m), std::size_t(ox + m))
                    : bg.at(c, std::size_t(i - my + m), std::size_t(j + shift_bg - mx + m));
        }
      }
  };
  for (long t = 0; t < long(opt.frames); ++t) {
    codec::StereoFrame f{Tensor({3, h, w}), Tensor({3, h, w})};
    render(t, 0, 0, f.left);
    render(t, clip.disparity_fg, clip.disparity_bg, f.right);
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

}  // namespace hdc::train
