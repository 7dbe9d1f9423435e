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

// Stereo P-frame network: motion estimation, motion autoencoder, motion
// compensation into multi-scale contexts, conditional context autoencoder
// and frame reconstruction. Both views run in lockstep so the enhancement
// blocks and the entropy models can exchange information between them.

#include <array>
#include <memory>
#include <optional>

#include "hdc/codec/config.hpp"
#include "hdc/codec/intra.hpp"
#include "hdc/codec/motion.hpp"
#include "hdc/em.hpp"
#include "hdc/fer.hpp"

namespace hdc::codec {

using Pair = std::array<Var, 2>;

struct ModelSwitches {
  bool fer = true;
  bool cross_view = true;
  fer::Ablation ablation = fer::Ablation::kNone;  // enhancement blocks and entropy-model alignment
};

struct DecodedBuffer {
  Pair x_hat;     // [3, H, W]
  Pair features;  // [Cf, H, W]
  bool valid() const { return x_hat[0].defined() && x_hat[1].defined() && features[0].defined() && features[1].defined(); }
};

struct MultiScaleContext {
  Var ctx1, ctx2, ctx3;  // strides 1, 2, 4
};

struct StreamIO {
  const em::SymbolChannel* mv = nullptr;
  const em::SymbolChannel* ctx = nullptr;
  const std::array<std::vector<std::int32_t>, 2>* mv_z = nullptr;
  const std::array<std::vector<std::int32_t>, 2>* ctx_z = nullptr;
};

struct PFrameOut {
  Pair x_hat, features, mv, mv_hat;
  em::EmOutput mv_em, ctx_em;
};

class StereoModel {
 public:
  StereoModel(const CodecConfig& cfg, nn::ParamStore& store);

  const CodecConfig& config() const { return cfg_; }
  const IntraCodec& intra() const { return *intra_; }
  // Fingerprint of the weights; bitstreams carry it.
  std::uint32_t fingerprint() const { return store_->fingerprint(); }

  // x is ignored in decode mode; h, w give the padded frame size there.
  PFrameOut p_frame(em::CoderMode mode, const Pair& x, const DecodedBuffer& buf, const ModelSwitches& sw,
                    const StreamIO* io = nullptr, std::size_t h = 0, std::size_t w = 0) const;

  Var intra_features(const Var& x_hat) const { return adaptor_(x_hat); }

  Pair motion_encode(const Pair& mv, const ModelSwitches& sw) const;
  Pair motion_decode(const Pair& y_hat, const ModelSwitches& sw) const;
  // Warped pyramid of the previous features before refinement.
  std::array<Var, 3> warped_pyramid(const Var& features, const Var& mv_hat) const;
  MultiScaleContext motion_compensate(const Var& features, const Var& mv_hat) const;
  Pair context_encode(const Pair& x, const std::array<MultiScaleContext, 2>& ctx, const ModelSwitches& sw) const;
  Pair context_decode(const Pair& y_hat, const std::array<MultiScaleContext, 2>& ctx, const ModelSwitches& sw) const;
  Var temporal_prior(const MultiScaleContext& ctx) const;
  Var reconstruct(const Var& features) const;

  const em::EntropyModel& motion_em() const { return mv_em_; }
  const em::EntropyModel& context_em() const { return ctx_em_; }

 private:
  Pair fer(const std::optional<fer::FerBlock>& blk, const Pair& x, const ModelSwitches& sw) const;

  CodecConfig cfg_;
  const nn::ParamStore* store_;
  MotionEstimator me_;
  nn::Conv2d mv_c1_, mv_c2_, mv_c3_, mv_c4_;
  nn::ConvTranspose2d mv_u1_, mv_u2_, mv_u3_, mv_u4_;
  std::optional<fer::FerBlock> mv_enc_fer4_, mv_enc_fer8_, mv_dec_fer8_, mv_dec_fer4_;
  em::EntropyModel mv_em_;
  nn::Conv2d mc_l1_, mc_l2_, mc_l3_;
  std::array<nn::Conv2d, 3> mc_r1_, mc_r2_;
  nn::Conv2d ce_a1_, ce_a2_, ce_a3_, ce_a4_, ce_a5_;
  std::optional<fer::FerBlock> ctx_enc_fer4_, ctx_enc_fer8_, ctx_dec_fer8_, ctx_dec_fer4_;
  nn::Conv2d tp_c1_, tp_c2_;
  em::EntropyModel ctx_em_;
  nn::ConvTranspose2d cd_b1_, cd_b2_, cd_b3_, cd_b4_;
  nn::Conv2d cd_m2_, cd_m3_, cd_m4_;
  nn::Conv2d rec1_, rec2_;
  nn::Conv2d adaptor_;
  std::unique_ptr<IntraCodec> intra_;
};

}  // namespace hdc::codec
