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

// Rate-distortion training: loss, Adam, the four-stage schedule and the
// loop that runs one stage.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdc/codec/gop.hpp"
#include "hdc/train/synthetic.hpp"

namespace hdc::train {

using Clip = std::vector<codec::StereoFrame>;

// Bits of one coded frame, per view, summed over the motion and context streams.
struct RateTerms {
  std::array<Var, 2> bits_y, bits_z;
};

RateTerms rate_terms(const codec::PFrameOut& out);

struct RDLossBreakdown {
  std::array<double, 2> distortion{};  // MSE per view
  std::array<double, 2> rate_y{}, rate_z{};  // bits per pixel per view
  double lambda = 0.0;
  double total = 0.0;
  Var loss;  // differentiable total
};

// total = sum over views of lambda * d + r_y + r_z, rates per pixel.
RDLossBreakdown rd_loss(const codec::Pair& x, const codec::Pair& x_hat, const RateTerms& bits, double lambda);

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}
  // Updates every parameter that requires a gradient.
  void step(nn::ParamStore& store);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<Tensor> m_, v_;
};

struct StageConfig {
  int stage = 4;
  int iterations = 1000;
  double learning_rate = 1e-5;
  int batch = 1;  // clips per step
  // Replaces the stage's switches, for ablation runs.
  std::optional<codec::ModelSwitches> switches_override;

  static StageConfig for_stage(int stage);
  static int default_iterations(int stage);
  bool trains(const std::string& param_name) const;
  codec::ModelSwitches switches() const;
};

// Marks each parameter trainable or frozen per the stage.
void apply_mask(nn::ParamStore& store, const StageConfig& cfg);

using ClipSource = std::function<Clip(std::size_t iteration, std::size_t index_in_batch)>;
// Deterministic synthetic clips keyed by (seed, iteration, index).
ClipSource synthetic_source(std::uint64_t seed, const SyntheticOptions& opt = {});

struct ClipLoss {
  double loss = 0.0;  // mean over P-frames
  std::vector<RDLossBreakdown> frames;
};

// Forward pass over one clip; a nonzero grad_weight also accumulates
// grad_weight * d(loss) into the parameters. Frame 0 is intra; later frames are P-frames. The decoded buffer is
// detached after each P-frame.
ClipLoss clip_loss(const codec::StereoModel& model, const Clip& clip, double lambda, const codec::ModelSwitches& sw,
                   double grad_weight = 0.0);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StageResult {
  std::vector<double> losses;  // one per iteration
};

using Progress = std::function<void(int iteration, double loss)>;

StageResult run_stage(const codec::StereoModel& model, nn::ParamStore& store, const ClipSource& data,
                      const StageConfig& cfg, double lambda, const Progress& progress = {});

// Mean loss over clips without gradients.
double evaluate(const codec::StereoModel& model, const std::vector<Clip>& clips, double lambda,
                const codec::ModelSwitches& sw);

// Trailing moving average with the given window.
std::vector<double> smooth(const std::vector<double>& xs, std::size_t window);

}  // namespace hdc::train
