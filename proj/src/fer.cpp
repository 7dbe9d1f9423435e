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

#include "hdc/fer.hpp"

#include <cmath>
#include <stdexcept>

namespace hdc::fer {

int default_d_feat(int stride, int s) {
  const int denom = stride * s * 2;
  return (192 + denom - 1) / denom;
}

FerBlock::FerBlock(nn::ParamStore& store, const std::string& name, int channels, int d_feat, int s)
    : channels_(channels), d_feat_(d_feat), s_(s) {
  if (channels < 1 || d_feat < 1) throw std::invalid_argument("fer: channels and d_feat must be >= 1");
  if (s != 1 && s != 2) throw std::invalid_argument("fer: s must be 1 or 2");
  const std::size_t c = std::size_t(channels), d = std::size_t(d_feat);
  down = nn::Conv2d(store, name + ".down", channels, channels, 3, s);
  if (s == 2) {
    up = nn::ConvTranspose2d(store, name + ".up", channels, channels, /*with_bias=*/false);
  } else {
    up_same = nn::Conv2d(store, name + ".up", channels, channels, 3, 1, nn::Init::kUniformFanIn, false);
  }
  const Shape ws{c, d * c, 3, 3};
  const std::size_t fan_in = d * c * 9;
  agg_l_w = store.add(name + ".agg_l.w", nn::uniform_fan_in(store.rng(), ws, fan_in, std::sqrt(3.0)));
  agg_l_b = store.add(name + ".agg_l.b", Tensor({c}));
  agg_r_w = store.add(name + ".agg_r.w", nn::uniform_fan_in(store.rng(), ws, fan_in, std::sqrt(3.0)));
  agg_r_b = store.add(name + ".agg_r.b", Tensor({c}));
  // Zero refinement: a fresh block is an exact identity.
  refine_l = nn::Conv2d(store, name + ".refine_l", channels, channels, 3, 1, nn::Init::kZero);
  refine_r = nn::Conv2d(store, name + ".refine_r", channels, channels, 3, 1, nn::Init::kZero);
}

Var FerBlock::upsample(const Var& x) const { return s_ == 2 ? up(x) : up_same(x); }

std::pair<Var, Var> FerBlock::operator()(const Var& kl, const Var& kr, Ablation mode) const {
  if (kl.shape() != kr.shape()) {
    throw std::invalid_argument("fer: view shapes differ " + shape_str(kl.shape()) + " vs " + shape_str(kr.shape()));
  }
  if (kl.shape().size() != 3 || std::size_t(channels_) != kl.dim(0)) {
    throw std::invalid_argument("fer: expected [" + std::to_string(channels_) + ",H,W], got " +
                                shape_str(kl.shape()));
  }
  if (s_ == 2 && (kl.dim(1) % 2 || kl.dim(2) % 2)) throw std::invalid_argument("fer: odd spatial size");

  const Var dl = down(kl), dr = down(kr);
  Var vl, vr, wl = agg_l_w, wr = agg_r_w;
  if (mode == Ablation::kNoShift) {
    vl = hdc_ops::shift_volume(dl, ShiftSign::kPlus, 1, 0);
    vr = hdc_ops::shift_volume(dr, ShiftSign::kMinus, 1, 0);
    wl = narrow(agg_l_w, 1, 0, std::size_t(channels_));
    wr = narrow(agg_r_w, 1, 0, std::size_t(channels_));
  } else {
    vl = hdc_ops::shift_volume(dl, ShiftSign::kPlus, d_feat_);
    vr = hdc_ops::shift_volume(dr, ShiftSign::kMinus, d_feat_);
  }
  Var fs;
  if (mode != Ablation::kNoAttention) fs = hdc_ops::attention_score(hdc_ops::similarity(vl, vr));

  const Var ref_l = hdc_ops::aggregate(fs, vr, wl, agg_l_b);
  const Var ref_r = hdc_ops::aggregate(fs, vl, wr, agg_r_b);
  return {add(kl, upsample(refine_l(ref_l))), add(kr, upsample(refine_r(ref_r)))};
}

namespace {
FerOutput run(const FeatureMap& kl, const FeatureMap& kr, const FerBlock& params, int d_feat, Ablation mode) {
  if (d_feat != params.d_feat()) {
    throw std::invalid_argument("fer: d_feat " + std::to_string(d_feat) + " does not match block (" +
                                std::to_string(params.d_feat()) + ")");
  }
  if (!kl.data.all_finite() || !kr.data.all_finite()) throw std::invalid_argument("fer: non-finite input");
  NoGradGuard no_grad;
  auto [l, r] = params(constant(kl.data), constant(kr.data), mode);
  return {{l.value(), View::kLeft, kl.stride}, {r.value(), View::kRight, kr.stride}};
}
}  // namespace

FerOutput fer_forward(const FeatureMap& kl, const FeatureMap& kr, const FerBlock& params, int d_feat) {
  return run(kl, kr, params, d_feat, Ablation::kNone);
}

FerOutput fer_ablated_forward(const FeatureMap& kl, const FeatureMap& kr, const FerBlock& params, int d_feat,
                              Ablation mode) {
  return run(kl, kr, params, d_feat, mode);
}

}  // namespace hdc::fer
