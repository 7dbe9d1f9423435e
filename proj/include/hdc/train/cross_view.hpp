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

// Cross-view prior experiment on synthetic stereo latents: two entropy
// models with the same initialization and the same data are trained on rate
// alone, one with cross-view priors and one with them zeroed, and compared on
// held-out pairs. Quantization error does not depend on the prior beyond the
// rounding offset, so both arms sit at (nearly) the same distortion.

#include <cstdint>
#include <random>
#include <vector>

#include "hdc/em.hpp"

namespace hdc::train {

struct CrossViewOptions {
  em::EmConfig em = default_em();
  std::size_t height = 16, width = 16;
  int disparity = 2;     // right(h, w) = left(h, w + disparity)
  double scale = 4.0;    // std of the i.i.d. scene latent
  double noise = 0.5;    // std of the right-view perturbation
  int iterations = 1000;
  double learning_rate = 2e-3;
  int eval_pairs = 20;
  std::uint64_t seed = 1;

  static em::EmConfig default_em();
};

struct LatentPair {
  std::array<Tensor, 2> y;
};

LatentPair stereo_latent_pair(std::mt19937_64& rng, const CrossViewOptions& opt);

struct CrossViewArm {
  double bits = 0.0;        // mean estimated bits per held-out pair
  double distortion = 0.0;  // latent MSE of y_hat
  std::vector<double> losses;
};

struct CrossViewResult {
  CrossViewArm on, off;
  // Relative rate saving of the cross-view arm, in percent.
  double gain_percent() const { return 100.0 * (1.0 - on.bits / off.bits); }
};

CrossViewArm train_cross_view_arm(const CrossViewOptions& opt, bool cross_view);
CrossViewResult cross_view_experiment(const CrossViewOptions& opt);

}  // namespace hdc::train
