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

// Procedural stereo clips: a textured background plane and a textured
// foreground rectangle, each at an integer disparity, under integer global
// motion. The right view sees the left-view point (h, w) at (h, w - d).

#include <cstddef>
#include <random>
#include <vector>

#include "hdc/codec/gop.hpp"

namespace hdc::train {

struct SyntheticOptions {
  std::size_t height = 64, width = 64, frames = 3;
  int max_disparity = 6;  // foreground disparity in [1, max]; background below it
  int max_motion = 2;     // per-frame global motion in [-max, max] on each axis
};

struct SyntheticClip {
  std::vector<codec::StereoFrame> frames;
  int disparity_bg = 0, disparity_fg = 0;
  int motion_x = 0, motion_y = 0;
};

SyntheticClip synthetic_clip(std::mt19937_64& rng, const SyntheticOptions& opt = {});

// Smooth colour texture in [0, 1], [3, h, w].
Tensor value_noise_texture(std::mt19937_64& rng, std::size_t h, std::size_t w);

}  // namespace hdc::train
