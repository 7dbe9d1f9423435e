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

// Hybrid disparity compensation primitives: horizontal shift volumes, the
// cross-view similarity map, its softplus/tanh attention score and the 3-D
// convolution that collapses the disparity axis.
//
// Volume plane d (0-based) holds the features shifted by d + 1 columns; the
// left view is sampled at w + (d + 1) and the right view at w - (d + 1), so
// plane d pairs views at a relative displacement of 2 (d + 1). Samples that
// fall outside the map are zero.

#include "hdc/autograd.hpp"
#include "hdc/tensor.hpp"

namespace hdc {

enum class View { kLeft = 0, kRight = 1 };

inline View other(View v) { return v == View::kLeft ? View::kRight : View::kLeft; }
inline const char* view_name(View v) { return v == View::kLeft ? "L" : "R"; }

struct FeatureMap {
  Tensor data;  // [C, H, W]
  View view = View::kLeft;
  int stride = 1;
};

struct DisparityVolume {
  Tensor data;  // [D, C, H, W]
  std::size_t max_disparity() const { return data.dim(0); }
};

// weight: [C, D * C, 3, 3] with input channel index d * C + c; bias: [C].
struct AggregatorParams {
  Tensor weight;
  Tensor bias;
};

enum class ShiftSign { kPlus, kMinus };

DisparityVolume build_shift_volume(const FeatureMap& k, ShiftSign sign, int max_disparity);
DisparityVolume similarity_map(const DisparityVolume& vl, const DisparityVolume& vr);
DisparityVolume normalize_score(const DisparityVolume& f);
FeatureMap aggregate(const DisparityVolume& f_star, const DisparityVolume& v, const AggregatorParams& params);

namespace hdc_ops {

// [C, H, W] -> [D, C, H, W]; plane d shifted by first_shift + d columns.
// first_shift = 0 with D = 1 gives the unshifted volume used when the shift
// is disabled.
Var shift_volume(const Var& k, ShiftSign sign, int max_disparity, int first_shift = 1);
Var similarity(const Var& vl, const Var& vr);
// tanh(softplus(f)), saturated inside the open interval (0, 1).
Var attention_score(const Var& f);
// Conv3D(f_star * v) with a 1x3x3 kernel and full reduction over d.
// Pass an undefined f_star to aggregate the raw volume.
Var aggregate(const Var& f_star, const Var& v, const Var& weight, const Var& bias);

}  // namespace hdc_ops

}  // namespace hdc
