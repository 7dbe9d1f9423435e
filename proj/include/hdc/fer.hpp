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

// Cross-view feature enhancement. Both views are downsampled by s, paired
// through shift volumes and one shared attention score, aggregated per
// direction, refined, upsampled and added back onto the inputs.

#include <string>
#include <utility>

#include "hdc/hdc_core.hpp"
#include "hdc/nn.hpp"

namespace hdc::fer {

enum class Ablation { kNone, kNoAttention, kNoShift };

// ceil(192 / (stride * s * 2)): full-resolution disparity range mapped to
// the downsampled feature grid, halved for the two-sided shift.
int default_d_feat(int stride, int s = 2);

class FerBlock {
 public:
  FerBlock() = default;
  // s is 1 or 2. With s = 1 the resampling convs are plain 3x3 convs.
  FerBlock(nn::ParamStore& store, const std::string& name, int channels, int d_feat, int s = 2);

  std::pair<Var, Var> operator()(const Var& kl, const Var& kr, Ablation mode = Ablation::kNone) const;

  int channels() const { return channels_; }
  int d_feat() const { return d_feat_; }
  int s() const { return s_; }

  nn::Conv2d down;
  nn::ConvTranspose2d up;     // s = 2
  nn::Conv2d up_same;         // s = 1
  Var agg_l_w, agg_l_b, agg_r_w, agg_r_b;  // [C, D*C, 3, 3], [C]
  nn::Conv2d refine_l, refine_r;

 private:
  Var upsample(const Var& x) const;

  int channels_ = 0, d_feat_ = 1, s_ = 2;
};

struct FerOutput {
  FeatureMap left, right;
};

FerOutput fer_forward(const FeatureMap& kl, const FeatureMap& kr, const FerBlock& params, int d_feat);
FerOutput fer_ablated_forward(const FeatureMap& kl, const FeatureMap& kr, const FerBlock& params, int d_feat,
                              Ablation mode);

}  // namespace hdc::fer
