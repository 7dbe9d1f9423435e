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

#include "hdc/codec/model.hpp"

#include <stdexcept>

namespace hdc::codec {

namespace {

em::EmConfig em_config(const CodecConfig& c, int latent, int hyper, int ctx) {
  em::EmConfig e;
  e.latent_channels = latent;
  e.slices = c.slices;
  e.hyper_channels = hyper;
  e.ctx_channels = ctx;
  e.phi_channels = c.phi_channels;
  e.prior_width = c.prior_width;
  e.est_width = c.est_width;
  e.d_feat = c.d_feat_latent;
  e.sigma_min = c.sigma_min;
  return e;
}

std::optional<fer::FerBlock> maybe_fer(const CodecConfig& c, nn::ParamStore& store, const std::string& name,
                                       int channels, int stride) {
  if (!c.fer_at(stride)) return std::nullopt;
  return fer::FerBlock(store, name, channels, c.d_feat_at(stride), c.fer_s);
}

Var lrelu(const Var& x) { return leaky_relu(x); }

}  // namespace

StereoModel::StereoModel(const CodecConfig& cfg, nn::ParamStore& store) : cfg_(cfg), store_(&store) {
  cfg.validate();
  const int cm = cfg.mv_channels, cf = cfg.feature_channels;
  me_ = MotionEstimator(store, "me", cfg.me_hidden, cfg.lk_levels, cfg.lk_iterations);

  mv_c1_ = nn::Conv2d(store, "mv_enc.c1", 2, cm, 3, 2);
  mv_c2_ = nn::Conv2d(store, "mv_enc.c2", cm, cm, 3, 2);
  mv_enc_fer4_ = maybe_fer(cfg, store, "mv_enc.fer4", cm, 4);
  mv_c3_ = nn::Conv2d(store, "mv_enc.c3", cm, cm, 3, 2);
  mv_enc_fer8_ = maybe_fer(cfg, store, "mv_enc.fer8", cm, 8);
  mv_c4_ = nn::Conv2d(store, "mv_enc.c4", cm, cfg.mv_latent_channels, 3, 2);
  mv_em_ = em::EntropyModel(store, "mv_em", em_config(cfg, cfg.mv_latent_channels, cfg.mv_hyper_channels, 0));
  mv_u1_ = nn::ConvTranspose2d(store, "mv_dec.u1", cfg.mv_latent_channels, cm);
  mv_dec_fer8_ = maybe_fer(cfg, store, "mv_dec.fer8", cm, 8);
  mv_u2_ = nn::ConvTranspose2d(store, "mv_dec.u2", cm, cm);
  mv_dec_fer4_ = maybe_fer(cfg, store, "mv_dec.fer4", cm, 4);
  mv_u3_ = nn::ConvTranspose2d(store, "mv_dec.u3", cm, cm);
  mv_u4_ = nn::ConvTranspose2d(store, "mv_dec.u4", cm, 2);

  mc_l1_ = nn::Conv2d(store, "mc.l1", cf, cf, 3, 1);
  mc_l2_ = nn::Conv2d(store, "mc.l2", cf, cf, 3, 2);
  mc_l3_ = nn::Conv2d(store, "mc.l3", cf, cf, 3, 2);
  for (int k = 0; k < 3; ++k) {
    mc_r1_[std::size_t(k)] = nn::Conv2d(store, "mc.r" + std::to_string(k + 1) + "a", cf, cf, 3, 1);
    mc_r2_[std::size_t(k)] = nn::Conv2d(store, "mc.r" + std::to_string(k + 1) + "b", cf, cf, 3, 1);
  }

  ce_a1_ = nn::Conv2d(store, "ctx_enc.a1", 3 + cf, cf, 3, 2);
  ce_a2_ = nn::Conv2d(store, "ctx_enc.a2", 2 * cf, cf, 3, 2);
  ce_a3_ = nn::Conv2d(store, "ctx_enc.a3", 2 * cf, cf, 3, 1);
  ctx_enc_fer4_ = maybe_fer(cfg, store, "ctx_enc.fer4", cf, 4);
  ce_a4_ = nn::Conv2d(store, "ctx_enc.a4", cf, cf, 3, 2);
  ctx_enc_fer8_ = maybe_fer(cfg, store, "ctx_enc.fer8", cf, 8);
  ce_a5_ = nn::Conv2d(store, "ctx_enc.a5", cf, cfg.latent_channels, 3, 2);
  tp_c1_ = nn::Conv2d(store, "tp.c1", cf, cf, 3, 2);
  tp_c2_ = nn::Conv2d(store, "tp.c2", cf, cf, 3, 2);
  ctx_em_ = em::EntropyModel(store, "ctx_em", em_config(cfg, cfg.latent_channels, cfg.hyper_channels, cf));
  cd_b1_ = nn::ConvTranspose2d(store, "ctx_dec.b1", cfg.latent_channels, cf);
  ctx_dec_fer8_ = maybe_fer(cfg, store, "ctx_dec.fer8", cf, 8);
  cd_b2_ = nn::ConvTranspose2d(store, "ctx_dec.b2", cf, cf);
  cd_m2_ = nn::Conv2d(store, "ctx_dec.m2", 2 * cf, cf, 3, 1);
  ctx_dec_fer4_ = maybe_fer(cfg, store, "ctx_dec.fer4", cf, 4);
  cd_b3_ = nn::ConvTranspose2d(store, "ctx_dec.b3", cf, cf);
  cd_m3_ = nn::Conv2d(store, "ctx_dec.m3", 2 * cf, cf, 3, 1);
  cd_b4_ = nn::ConvTranspose2d(store, "ctx_dec.b4", cf, cf);
  cd_m4_ = nn::Conv2d(store, "ctx_dec.m4", 2 * cf, cf, 3, 1);

  rec1_ = nn::Conv2d(store, "recon.r1", cf, cf, 3, 1);
  rec2_ = nn::Conv2d(store, "recon.r2", cf, 3, 3, 1);
  adaptor_ = nn::Conv2d(store, "adaptor", 3, cf, 3, 1);
  intra_ = make_intra(cfg, store);
}

Pair StereoModel::fer(const std::optional<fer::FerBlock>& blk, const Pair& x, const ModelSwitches& sw) const {
  if (!blk || !sw.fer) return x;
  auto [l, r] = (*blk)(x[0], x[1], sw.ablation);
  return {l, r};
}

Pair StereoModel::motion_encode(const Pair& mv, const ModelSwitches& sw) const {
  Pair h;
  for (int v = 0; v < 2; ++v) h[v] = lrelu(mv_c2_(lrelu(mv_c1_(mv[v]))));
  h = fer(mv_enc_fer4_, h, sw);
  for (int v = 0; v < 2; ++v) h[v] = lrelu(mv_c3_(h[v]));
  h = fer(mv_enc_fer8_, h, sw);
  for (int v = 0; v < 2; ++v) h[v] = mv_c4_(h[v]);
  return h;
}

Pair StereoModel::motion_decode(const Pair& y_hat, const ModelSwitches& sw) const {
  Pair h;
  for (int v = 0; v < 2; ++v) h[v] = lrelu(mv_u1_(y_hat[v]));
  h = fer(mv_dec_fer8_, h, sw);
  for (int v = 0; v < 2; ++v) h[v] = lrelu(mv_u2_(h[v]));
  h = fer(mv_dec_fer4_, h, sw);
  for (int v = 0; v < 2; ++v) h[v] = mv_u4_(lrelu(mv_u3_(h[v])));
  return h;
}

std::array<Var, 3> StereoModel::warped_pyramid(const Var& features, const Var& mv_hat) const {
  const Var l1 = mc_l1_(features);
  const Var l2 = mc_l2_(lrelu(l1));
  const Var l3 = mc_l3_(lrelu(l2));
  const Var mv2 = scale(avg_pool2(mv_hat), 0.5);
  const Var mv3 = scale(avg_pool2(mv2), 0.5);
  return {bilinear_warp(l1, mv_hat), bilinear_warp(l2, mv2), bilinear_warp(l3, mv3)};
}

MultiScaleContext StereoModel::motion_compensate(const Var& features, const Var& mv_hat) const {
  const auto w = warped_pyramid(features, mv_hat);
  std::array<Var, 3> c;
  for (std::size_t k = 0; k < 3; ++k) c[k] = add(w[k], mc_r2_[k](lrelu(mc_r1_[k](w[k]))));
  return {c[0], c[1], c[2]};
}

Pair StereoModel::context_encode(const Pair& x, const std::array<MultiScaleContext, 2>& ctx,
                                 const ModelSwitches& sw) const {
  Pair h;
  for (int v = 0; v < 2; ++v) {
    const Var a1 = lrelu(ce_a1_(concat({x[v], ctx[v].ctx1})));
    const Var a2 = lrelu(ce_a2_(concat({a1, ctx[v].ctx2})));
    h[v] = ce_a3_(concat({a2, ctx[v].ctx3}));
  }
  h = fer(ctx_enc_fer4_, h, sw);
  for (int v = 0; v < 2; ++v) h[v] = lrelu(ce_a4_(lrelu(h[v])));
  h = fer(ctx_enc_fer8_, h, sw);
  for (int v = 0; v < 2; ++v) h[v] = ce_a5_(h[v]);
  return h;
}

Pair StereoModel::context_decode(const Pair& y_hat, const std::array<MultiScaleContext, 2>& ctx,
                                 const ModelSwitches& sw) const {
  Pair h;
  for (int v = 0; v < 2; ++v) h[v] = lrelu(cd_b1_(y_hat[v]));
  h = fer(ctx_dec_fer8_, h, sw);
  for (int v = 0; v < 2; ++v) h[v] = cd_m2_(concat({lrelu(cd_b2_(h[v])), ctx[v].ctx3}));
  h = fer(ctx_dec_fer4_, h, sw);
  for (int v = 0; v < 2; ++v) {
    const Var b3 = cd_m3_(concat({lrelu(cd_b3_(lrelu(h[v]))), ctx[v].ctx2}));
    h[v] = cd_m4_(concat({lrelu(cd_b4_(lrelu(b3))), ctx[v].ctx1}));
  }
  return h;
}

Var StereoModel::temporal_prior(const MultiScaleContext& ctx) const { return tp_c2_(lrelu(tp_c1_(ctx.ctx3))); }

Var StereoModel::reconstruct(const Var& features) const {
  return clamp_ste(add_scalar(rec2_(lrelu(rec1_(features))), 0.5), 0.0, 1.0);
}

PFrameOut StereoModel::p_frame(em::CoderMode mode, const Pair& x, const DecodedBuffer& buf, const ModelSwitches& sw,
                               const StreamIO* io, std::size_t h, std::size_t w) const {
  if (!buf.valid()) throw std::logic_error("p_frame: decoded buffer is empty");
  std::optional<NoGradGuard> no_grad;
  if (mode != em::CoderMode::kTrain) no_grad.emplace();
  const bool decoding = mode == em::CoderMode::kDecode;
  if (!decoding) {
    h = x[0].dim(1);
    w = x[0].dim(2);
  }
  if (h % 64 || w % 64) throw std::invalid_argument("p_frame: frame size must be a multiple of 64");
  const em::EmSwitches esw{sw.cross_view, sw.ablation};
  const std::size_t hl = h / 16, wl = w / 16;

  PFrameOut out;
  Pair y_mv;
  if (!decoding) {
    for (int v = 0; v < 2; ++v) out.mv[v] = me_(x[v], buf.x_hat[v]);
    y_mv = motion_encode(out.mv, sw);
  }
  out.mv_em = mv_em_.run(mode, y_mv, {}, esw, io ? io->mv : nullptr, io ? io->mv_z : nullptr,
                         {std::size_t(cfg_.mv_latent_channels), hl, wl});
  out.mv_hat = motion_decode({out.mv_em.view[0].y_hat, out.mv_em.view[1].y_hat}, sw);

  std::array<MultiScaleContext, 2> ctx;
  Pair tp;
  for (int v = 0; v < 2; ++v) {
    ctx[v] = motion_compensate(buf.features[v], out.mv_hat[v]);
    tp[v] = temporal_prior(ctx[v]);
  }
  Pair y;
  if (!decoding) y = context_encode(x, ctx, sw);
  out.ctx_em = ctx_em_.run(mode, y, tp, esw, io ? io->ctx : nullptr, io ? io->ctx_z : nullptr,
                           {std::size_t(cfg_.latent_channels), hl, wl});
  out.features = context_decode({out.ctx_em.view[0].y_hat, out.ctx_em.view[1].y_hat}, ctx, sw);
  for (int v = 0; v < 2; ++v) out.x_hat[v] = reconstruct(out.features[v]);
  return out;
}

}  // namespace hdc::codec
