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

#include "hdc/train/cross_view.hpp"

#include <stdexcept>

#include "hdc/train/train.hpp"

namespace hdc::train {

em::EmConfig CrossViewOptions::default_em() {
  em::EmConfig c;
  c.latent_channels = 16;
  c.slices = 4;
  c.hyper_channels = 8;
  c.phi_channels = 8;
  c.prior_width = 8;
  c.est_width = 16;
  c.d_feat = 3;
  return c;
}

LatentPair stereo_latent_pair(std::mt19937_64& rng, const CrossViewOptions& opt) {
  if (opt.disparity < 0 || opt.height == 0 || opt.width == 0) throw std::invalid_argument("stereo_latent_pair: bad geometry");
  const std::size_t c = std::size_t(opt.em.latent_channels), h = opt.height, w = opt.width;
  const std::size_t d = std::size_t(opt.disparity), tw = w + d;
  std::normal_distribution<double> scene(0.0, opt.scale), eps(0.0, opt.noise);
  std::vector<double> t(c * h * tw);
  for (auto& v : t) v = scene(rng);
  LatentPair p{{Tensor({c, h, w}), Tensor({c, h, w})}};
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const std::size_t row = (k * h + i) * tw;
        p.y[0][(k * h + i) * w + j] = t[row + j];
        p.y[1][(k * h + i) * w + j] = t[row + j + d] + (opt.noise > 0 ? eps(rng) : 0.0);
      }
  return p;
}

CrossViewArm train_cross_view_arm(const CrossViewOptions& opt, bool cross_view) {
  nn::ParamStore store(opt.seed);
  const em::EntropyModel model(store, "em", opt.em);
  em::EmSwitches sw;
  sw.cross_view = cross_view;
  Adam adam(opt.learning_rate);
  CrossViewArm arm;
  const std::array<Var, 2> no_ctx{};

  std::mt19937_64 data(opt.seed * 7919 + 17);
  for (int it = 0; it < opt.iterations; ++it) {
    const LatentPair p = stereo_latent_pair(data, opt);
    store.zero_grad();
    const em::EmOutput out = model.run(em::CoderMode::kTrain, {constant(p.y[0]), constant(p.y[1])}, no_ctx, sw);
    const Var bits = out.total_bits();
    bits.backward();
    adam.step(store);
    arm.losses.push_back(bits.value()[0]);
  }

  // Held-out pairs come from a stream the training never touched.
  std::mt19937_64 held(opt.seed * 104729 + 3);
  double bits = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (int k = 0; k < opt.eval_pairs; ++k) {
    const LatentPair p = stereo_latent_pair(held, opt);
    const em::EmOutput out = model.run(em::CoderMode::kEncode, {constant(p.y[0]), constant(p.y[1])}, no_ctx, sw);
    bits += out.total_bits().value()[0];
    for (std::size_t v = 0; v < 2; ++v) {
      const Tensor& a = out.view[v].y_hat.value();
      for (std::size_t i = 0; i < a.numel(); ++i) sq += (a[i] - p.y[v][i]) * (a[i] - p.y[v][i]);
      count += a.numel();
    }
  }
  arm.bits = bits / opt.eval_pairs;
  arm.distortion = sq / double(count);
  return arm;
}

CrossViewResult cross_view_experiment(const CrossViewOptions& opt) {
  return {train_cross_view_arm(opt, true), train_cross_view_arm(opt, false)};
}

}  // namespace hdc::train
