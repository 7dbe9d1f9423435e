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

// Motion fields use the backward convention out(x) = ref(x + mv):
// channel 0 is horizontal, channel 1 vertical, both in pixels.

#include <string>

#include "hdc/nn.hpp"

namespace hdc::codec {

// ITU-R BT.709 luma weights on [3, H, W]; returns [H, W].
Tensor luma(const Tensor& rgb);

// Coarse-to-fine Lucas-Kanade on 2x2-averaged pyramids, 5x5 windows.
Tensor lucas_kanade(const Tensor& cur, const Tensor& ref, int levels, int iterations);

// Bilinear warp of a plain tensor with edge clamping.
Tensor warp(const Tensor& x, const Tensor& flow);

// Lucas-Kanade initialisation (not trained) plus a learned residual head.
// The head's last layer starts at zero.
class MotionEstimator {
 public:
  MotionEstimator() = default;
  MotionEstimator(nn::ParamStore& store, const std::string& name, int hidden, int levels, int iterations);
  Var operator()(const Var& cur, const Var& ref) const;
  Tensor initial_flow(const Tensor& cur, const Tensor& ref) const;

 private:
  nn::Conv2d head1_, head2_;
  int levels_ = 3, iterations_ = 3;
};

}  // namespace hdc::codec
