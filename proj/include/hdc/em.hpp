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

// Channel-sliced, view-interleaved entropy model. Latents of both views are
// split into N slices and coded in the order L1 R1 L2 R2 ... LN RN; slice n
// of view M is conditioned on its own earlier slices, the first q slices of
// the other view (aligned through shift volumes), and the fused
// hyperprior/temporal prior Phi_n.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hdc/fer.hpp"
#include "hdc/hdc_core.hpp"
#include "hdc/nn.hpp"

namespace hdc::em {

inline constexpr double kDefaultSigmaMin = 0.11;
inline constexpr double kProbFloor = 1.0 / 65536.0;
inline constexpr std::int32_t kMaxSymbol = 32767;

struct SliceId {
  View view;
  int index;  // 1-based
  bool operator==(const SliceId&) const = default;
};

std::vector<Tensor> slice_channels(const Tensor& y, int n);
std::vector<SliceId> coding_order(int n);
// Number of other-view slices usable by slice (view, n).
int cross_view_count(View view, int n);

// round(y - mu) + mu.
Tensor quantize_slice(const Tensor& y, const Tensor& mu);
// Training path: rounding passes gradients straight through to y.
Var quantize_ste(const Var& y, const Var& mu);

struct GaussianParams {
  Tensor mu, sigma;
};

// Probability of the unit bin around delta under N(0, sigma), floored.
double bin_probability(double delta, double sigma);
double rate_slice(const Tensor& y_hat, const GaussianParams& p);
// Differentiable in y_hat, mu and sigma; returns total bits.
Var rate_bits(const Var& y_hat, const Var& mu, const Var& sigma);

// Per-channel monotone CDF network (filters 1-3-3-1) for the hyper latent.
class FactorizedPrior {
 public:
  FactorizedPrior() = default;
  FactorizedPrior(nn::ParamStore& store, const std::string& name, int channels, double init_scale = 10.0);
  // Bits of an integer-valued z [C, H, W]; differentiable in z and the parameters.
  Var bits(const Var& z) const;
  double probability(int channel, double z) const;
  int channels() const { return channels_; }

  std::vector<Var> matrices, biases, factors;

 private:
  int channels_ = 0;
};

struct EmConfig {
  int latent_channels = 96;  // C_y
  int slices = 4;            // N
  int hyper_channels = 64;   // C_z
  int ctx_channels = 0;      // temporal prior channels at latent resolution, 0 = none
  int phi_channels = 32;     // per-slice prior width
  int prior_width = 32;      // aligned cross-view prior width
  int est_width = 64;
  int d_feat = 12;
  double sigma_min = kDefaultSigmaMin;

  int slice_channels() const { return latent_channels / slices; }
};

struct EmSwitches {
  bool cross_view = true;
  fer::Ablation align_mode = fer::Ablation::kNone;
};

enum class CoderMode { kTrain, kEncode, kDecode };

// Latent slices coded so far, per view. Slot n-1 holds slice n.
struct SliceStore {
  std::array<std::vector<Var>, 2> y_hat;
};

// Receives (encode) or supplies (decode) the integer symbols of each slice
// in coding order; sigma is the per-element scale the coder may use.
struct SymbolChannel {
  std::function<void(View, int slice, const std::vector<std::int32_t>&, const Tensor& sigma)> put;
  std::function<std::vector<std::int32_t>(View, int slice, std::size_t n, const Tensor& sigma)> get;
};

struct EmViewOut {
  Var y_hat, z_hat;
  Var bits_y, bits_z;  // scalar, bits
  std::vector<Tensor> mu, sigma;  // per slice
  std::vector<std::vector<std::int32_t>> symbols;
  std::vector<std::int32_t> z_symbols;
};

struct EmOutput {
  std::array<EmViewOut, 2> view;
  Var total_bits() const;
};

class EntropyModel {
 public:
  EntropyModel() = default;
  EntropyModel(nn::ParamStore& store, const std::string& name, const EmConfig& cfg);

  const EmConfig& config() const { return cfg_; }

  // y: [C_y, H, W] per view (H, W divisible by 4); ctx: [ctx_channels, H, W]
  // per view or undefined. kDecode ignores y and pulls symbols from io.get;
  // z symbols then arrive through hyper_z.
  EmOutput run(CoderMode mode, const std::array<Var, 2>& y, const std::array<Var, 2>& ctx, const EmSwitches& sw,
               const SymbolChannel* io = nullptr, const std::array<std::vector<std::int32_t>, 2>* hyper_z = nullptr,
               Shape latent_shape = {}) const;

  // Hyperprior: z = h_a(y), z_hat, bits and the decoded hyper features.
  struct Hyper {
    Var z, z_hat, bits, features;
  };
  Hyper hyper_encode(const Var& y, CoderMode mode) const;
  Hyper hyper_decode(const Var& z_hat) const;
  // Fuses hyper features with the temporal prior and splits into N slices.
  std::vector<Var> fuse(const Var& hyper_features, const Var& ctx) const;

  // Aligned other-view prior for slice (view, n): [prior_width, H, W].
  Var align_cross_view(View view, int n, const SliceStore& store, const Var& anchor, const EmSwitches& sw) const;
  // mu, sigma of slice (view, n); reads only what the coding order allows.
  std::pair<Var, Var> estimate(View view, int n, const SliceStore& store, const std::vector<Var>& phi,
                               const EmSwitches& sw) const;

  const FactorizedPrior& z_prior() const { return z_prior_; }

  struct SliceNets {
    nn::Conv2d proj_other, proj_anchor;  // 1x1 to prior_width
    Var agg_w, agg_b;
    nn::Conv2d est1, est2, est3;
  };
  const SliceNets& nets(View v, int n) const { return nets_[std::size_t(v)][std::size_t(n - 1)]; }

 private:
  EmConfig cfg_;
  nn::Conv2d ha1_, ha2_, ha3_;
  nn::ConvTranspose2d hs1_, hs2_;
  nn::Conv2d hs3_;
  nn::Conv2d fuse1_, fuse2_;
  FactorizedPrior z_prior_;
  std::array<std::vector<SliceNets>, 2> nets_;
};

}  // namespace hdc::em
