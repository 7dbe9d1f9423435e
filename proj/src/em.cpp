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

#include "hdc/em.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

namespace hdc::em {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }
double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

std::vector<Tensor> slice_channels(const Tensor& y, int n) {
  require(y.rank() == 3, "slice_channels: expected [C,H,W], got " + shape_str(y.shape()));
  require(n >= 1 && y.dim(0) % std::size_t(n) == 0,
          "slice_channels: " + std::to_string(y.dim(0)) + " channels not divisible by " + std::to_string(n));
  const std::size_t cs = y.dim(0) / std::size_t(n);
  std::vector<Tensor> out;
  for (int i = 0; i < n; ++i) out.push_back(channel_slice(y, std::size_t(i) * cs, cs));
  return out;
}

std::vector<SliceId> coding_order(int n) {
  require(n >= 1, "coding_order: N must be >= 1");
  std::vector<SliceId> order;
  for (int i = 1; i <= n; ++i) {
    order.push_back({View::kLeft, i});
    order.push_back({View::kRight, i});
  }
  return order;
}

int cross_view_count(View view, int n) { return view == View::kLeft ? n - 1 : n; }

Tensor quantize_slice(const Tensor& y, const Tensor& mu) {
  require(y.same_shape(mu), "quantize_slice: shape mismatch");
  Tensor out(y.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) out[i] = std::nearbyint(y[i] - mu[i]) + mu[i];
  return out;
}

Var quantize_ste(const Var& y, const Var& mu) { return add(round_ste(sub(y, mu)), mu); }

double bin_probability(double delta, double sigma) {
  const double a = std::abs(delta);
  const double p = norm_cdf((0.5 - a) / sigma) - norm_cdf((-0.5 - a) / sigma);
  return std::max(p, kProbFloor);
}

double rate_slice(const Tensor& y_hat, const GaussianParams& p) {
  require(y_hat.same_shape(p.mu) && y_hat.same_shape(p.sigma), "rate_slice: shape mismatch");
  double bits = 0.0;
  for (std::size_t i = 0; i < y_hat.numel(); ++i) {
    require(p.sigma[i] > 0.0, "rate_slice: non-positive sigma");
    bits -= std::log2(bin_probability(y_hat[i] - p.mu[i], p.sigma[i]));
  }
  return bits;
}

Var rate_bits(const Var& y_hat, const Var& mu, const Var& sigma) {
  require(y_hat.shape() == mu.shape() && y_hat.shape() == sigma.shape(), "rate_bits: shape mismatch");
  const Tensor& yv = y_hat.value();
  const Tensor& mv = mu.value();
  const Tensor& sv = sigma.value();
  double bits = 0.0;
  for (std::size_t i = 0; i < yv.numel(); ++i) bits -= std::log2(bin_probability(yv[i] - mv[i], sv[i]));
  return make_op(Tensor::scalar(bits), {y_hat, mu, sigma}, [](detail::Node& n) {
    const Tensor& yv = n.inputs[0]->value;
    const Tensor& mv = n.inputs[1]->value;
    const Tensor& sv = n.inputs[2]->value;
    const double up = n.grad[0];
    Tensor gy(yv.shape()), gm(yv.shape()), gs(yv.shape());
    for (std::size_t i = 0; i < yv.numel(); ++i) {
      const double d = yv[i] - mv[i], a = std::abs(d), s = sv[i];
      const double u = (0.5 - a) / s, v = (-0.5 - a) / s;
      const double p = norm_cdf(u) - norm_cdf(v);
      // Below the floor only a push towards higher probability gets through.
      if (p < kProbFloor && up <= 0.0) continue;
      const double dbits_dp = -up / (std::max(p, kProbFloor) * std::numbers::ln2);
      const double dp_da = (norm_pdf(v) - norm_pdf(u)) / s;
      const double dp_ds = (v * norm_pdf(v) - u * norm_pdf(u)) / s;
      const double dp_dd = d > 0 ? dp_da : (d < 0 ? -dp_da : 0.0);
      gy[i] = dbits_dp * dp_dd;
      gm[i] = -gy[i];
      gs[i] = dbits_dp * dp_ds;
    }
    detail::accumulate(n, 0, gy);
    detail::accumulate(n, 1, gm);
    detail::accumulate(n, 2, gs);
  });
}

// ---------------------------------------------------------------------------
// Factorized prior

namespace {
constexpr int kFilters[] = {1, 3, 3, 1};
constexpr int kLayers = 3;
}  // namespace

FactorizedPrior::FactorizedPrior(nn::ParamStore& store, const std::string& name, int channels, double init_scale)
    : channels_(channels) {
  const double scale = std::pow(init_scale, 1.0 / (kLayers + 1));
  std::uniform_real_distribution<double> bias_init(-0.5, 0.5);
  const std::size_t c = std::size_t(channels);
  for (int k = 0; k < kLayers; ++k) {
    const std::size_t fo = std::size_t(kFilters[k + 1]), fi = std::size_t(kFilters[k]);
    const double m0 = std::log(std::expm1(1.0 / scale / double(fo)));
    matrices.push_back(store.add(name + ".m" + std::to_string(k), Tensor({c, fo, fi}, m0)));
    Tensor b({c, fo});
    for (auto& v : b.values()) v = bias_init(store.rng());
    biases.push_back(store.add(name + ".b" + std::to_string(k), std::move(b)));
    if (k + 1 < kLayers) factors.push_back(store.add(name + ".a" + std::to_string(k), Tensor({c, fo})));
  }
}

namespace {

// Activations of one evaluation of the CDF logit network for one channel.
struct LogitTrace {
  double in[kLayers][3];   // layer inputs
  double pre[kLayers][3];  // affine outputs
  double out;
};

struct ChannelView {
  const double* m[kLayers];
  const double* b[kLayers];
  const double* a[kLayers - 1];
};

ChannelView channel_params(const FactorizedPrior& fp, int c) {
  ChannelView v{};
  for (int k = 0; k < kLayers; ++k) {
    v.m[k] = fp.matrices[k].value().data() + std::size_t(c) * kFilters[k + 1] * kFilters[k];
    v.b[k] = fp.biases[k].value().data() + std::size_t(c) * kFilters[k + 1];
    if (k + 1 < kLayers) v.a[k] = fp.factors[k].value().data() + std::size_t(c) * kFilters[k + 1];
  }
  return v;
}

double logit_forward(const ChannelView& p, double x, LogitTrace& t) {
  double cur[3] = {x, 0, 0};
  for (int k = 0; k < kLayers; ++k) {
    const int fi = kFilters[k], fo = kFilters[k + 1];
    for (int j = 0; j < fi; ++j) t.in[k][j] = cur[j];
    for (int i = 0; i < fo; ++i) {
      double acc = p.b[k][i];
      for (int j = 0; j < fi; ++j) acc += softplus(p.m[k][i * fi + j]) * t.in[k][j];
      t.pre[k][i] = acc;
      cur[i] = k + 1 < kLayers ? acc + std::tanh(p.a[k][i]) * std::tanh(acc) : acc;
    }
  }
  t.out = cur[0];
  return t.out;
}

struct ChannelGrads {
  double m[kLayers][9] = {};
  double b[kLayers][3] = {};
  double a[kLayers - 1][3] = {};
};

// Back-propagates d(out) = g through one trace; returns d(x).
double logit_backward(const ChannelView& p, const LogitTrace& t, double g, ChannelGrads& gr) {
  double d_out[3] = {g, 0, 0};
  for (int k = kLayers - 1; k >= 0; --k) {
    const int fi = kFilters[k], fo = kFilters[k + 1];
    double d_pre[3];
    for (int i = 0; i < fo; ++i) {
      if (k + 1 < kLayers) {
        const double ta = std::tanh(p.a[k][i]), th = std::tanh(t.pre[k][i]);
        gr.a[k][i] += d_out[i] * (1.0 - ta * ta) * th;
        d_pre[i] = d_out[i] * (1.0 + ta * (1.0 - th * th));
      } else {
        d_pre[i] = d_out[i];
      }
      gr.b[k][i] += d_pre[i];
    }
    double d_in[3] = {0, 0, 0};
    for (int i = 0; i < fo; ++i) {
      for (int j = 0; j < fi; ++j) {
        const double mij = p.m[k][i * fi + j];
        gr.m[k][i * fi + j] += d_pre[i] * t.in[k][j] * sigmoid(mij);
        d_in[j] += softplus(mij) * d_pre[i];
      }
    }
    for (int j = 0; j < fi; ++j) d_out[j] = d_in[j];
  }
  return d_out[0];
}

struct BinEval {
  double p;        // unfloored
  double dp_dl, dp_du;
};

BinEval bin_eval(double l, double u) {
  const double s = (l + u > 0.0) ? -1.0 : 1.0;
  const double su = sigmoid(s * u), sl = sigmoid(s * l);
  const double e = su - sl;
  const double sgn = e >= 0.0 ? 1.0 : -1.0;
  return {std::abs(e), -sgn * s * sl * (1.0 - sl), sgn * s * su * (1.0 - su)};
}

}  // namespace

double FactorizedPrior::probability(int channel, double z) const {
  const auto p = channel_params(*this, channel);
  LogitTrace tl, tu;
  const double l = logit_forward(p, z - 0.5, tl), u = logit_forward(p, z + 0.5, tu);
  return std::max(bin_eval(l, u).p, kProbFloor);
}

Var FactorizedPrior::bits(const Var& z) const {
  require(z.shape().size() == 3 && z.dim(0) == std::size_t(channels_),
          "factorized prior: expected [" + std::to_string(channels_) + ",H,W], got " + shape_str(z.shape()));
  const Tensor& zv = z.value();
  const std::size_t plane = zv.dim(1) * zv.dim(2);
  double total = 0.0;
  for (int c = 0; c < channels_; ++c) {
    for (std::size_t i = 0; i < plane; ++i) total -= std::log2(probability(c, zv[std::size_t(c) * plane + i]));
  }
  std::vector<Var> inputs{z};
  for (int k = 0; k < kLayers; ++k) {
    inputs.push_back(matrices[k]);
    inputs.push_back(biases[k]);
    if (k + 1 < kLayers) inputs.push_back(factors[k]);
  }
  const FactorizedPrior self = *this;
  return make_op(Tensor::scalar(total), inputs, [self, plane](detail::Node& n) {
    const Tensor& zv = n.inputs[0]->value;
    const double up = n.grad[0];
    Tensor gz(zv.shape());
    std::vector<Tensor> gm, gb, ga;
    for (int k = 0; k < kLayers; ++k) {
      gm.emplace_back(self.matrices[k].shape());
      gb.emplace_back(self.biases[k].shape());
      if (k + 1 < kLayers) ga.emplace_back(self.factors[k].shape());
    }
    for (int c = 0; c < self.channels_; ++c) {
      const auto p = channel_params(self, c);
      ChannelGrads gr;
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t idx = std::size_t(c) * plane + i;
        LogitTrace tl, tu;
        const double l = logit_forward(p, zv[idx] - 0.5, tl), u = logit_forward(p, zv[idx] + 0.5, tu);
        const BinEval be = bin_eval(l, u);
        if (be.p < kProbFloor && up <= 0.0) continue;
        const double dbits_dp = -up / (std::max(be.p, kProbFloor) * std::numbers::ln2);
        gz[idx] = logit_backward(p, tl, dbits_dp * be.dp_dl, gr) + logit_backward(p, tu, dbits_dp * be.dp_du, gr);
      }
      for (int k = 0; k < kLayers; ++k) {
        const int fo = kFilters[k + 1], fi = kFilters[k];
        for (int j = 0; j < fo * fi; ++j) gm[k][std::size_t(c) * fo * fi + j] = gr.m[k][j];
        for (int j = 0; j < fo; ++j) gb[k][std::size_t(c) * fo + j] = gr.b[k][j];
        if (k + 1 < kLayers)
          for (int j = 0; j < fo; ++j) ga[k][std::size_t(c) * fo + j] = gr.a[k][j];
      }
    }
    detail::accumulate(n, 0, gz);
    std::size_t slot = 1;
    for (int k = 0; k < kLayers; ++k) {
      detail::accumulate(n, slot++, gm[k]);
      detail::accumulate(n, slot++, gb[k]);
      if (k + 1 < kLayers) detail::accumulate(n, slot++, ga[k]);
    }
  });
}

// ---------------------------------------------------------------------------
// Entropy model

Var EmOutput::total_bits() const {
  return add(add(view[0].bits_y, view[0].bits_z), add(view[1].bits_y, view[1].bits_z));
}

EntropyModel::EntropyModel(nn::ParamStore& store, const std::string& name, const EmConfig& cfg) : cfg_(cfg) {
  require(cfg.slices >= 1 && cfg.latent_channels % cfg.slices == 0, "em: latent channels must divide into slices");
  require(cfg.d_feat >= 1, "em: d_feat must be >= 1");
  const int cy = cfg.latent_channels, cz = cfg.hyper_channels, cs = cfg.slice_channels();
  ha1_ = nn::Conv2d(store, name + ".ha1", cy, cz, 3, 1);
  ha2_ = nn::Conv2d(store, name + ".ha2", cz, cz, 3, 2);
  ha3_ = nn::Conv2d(store, name + ".ha3", cz, cz, 3, 2);
  hs1_ = nn::ConvTranspose2d(store, name + ".hs1", cz, cz);
  hs2_ = nn::ConvTranspose2d(store, name + ".hs2", cz, cy);
  hs3_ = nn::Conv2d(store, name + ".hs3", cy, cy, 3, 1);
  fuse1_ = nn::Conv2d(store, name + ".fuse1", cy + cfg.ctx_channels, cfg.est_width, 1, 1);
  fuse2_ = nn::Conv2d(store, name + ".fuse2", cfg.est_width, cfg.slices * cfg.phi_channels, 3, 1);
  z_prior_ = FactorizedPrior(store, name + ".zprior", cz);

  const std::size_t p = std::size_t(cfg.prior_width);
  for (View v : {View::kLeft, View::kRight}) {
    for (int n = 1; n <= cfg.slices; ++n) {
      const std::string base = name + ".s" + view_name(v) + std::to_string(n);
      SliceNets sn;
      const int q = cross_view_count(v, n);
      if (q > 0) {
        const std::string al = base + ".align";
        sn.proj_other = nn::Conv2d(store, al + ".proj_other", q * cs, cfg.prior_width, 1, 1);
        sn.proj_anchor = nn::Conv2d(store, al + ".proj_anchor", cfg.phi_channels, cfg.prior_width, 1, 1);
        const std::size_t d = std::size_t(cfg.d_feat);
        sn.agg_w = store.add(al + ".agg.w", nn::uniform_fan_in(store.rng(), {p, d * p, 3, 3}, d * p * 9, std::sqrt(3.0)));
        sn.agg_b = store.add(al + ".agg.b", Tensor({p}));
      }
      const int in_c = cfg.prior_width + (n - 1) * cs + cfg.phi_channels;
      sn.est1 = nn::Conv2d(store, base + ".est1", in_c, cfg.est_width, 1, 1);
      sn.est2 = nn::Conv2d(store, base + ".est2", cfg.est_width, cfg.est_width, 3, 1);
      sn.est3 = nn::Conv2d(store, base + ".est3", cfg.est_width, 2 * cs, 1, 1);
      nets_[std::size_t(v)].push_back(std::move(sn));
    }
  }
}

EntropyModel::Hyper EntropyModel::hyper_encode(const Var& y, CoderMode mode) const {
  require(y.shape().size() == 3 && y.dim(0) == std::size_t(cfg_.latent_channels),
          "em: latent shape " + shape_str(y.shape()));
  require(y.dim(1) % 4 == 0 && y.dim(2) % 4 == 0, "em: latent height/width must be multiples of 4");
  const Var z = ha3_(leaky_relu(ha2_(leaky_relu(ha1_(y)))));
  Var z_hat;
  if (mode == CoderMode::kTrain) {
    z_hat = round_ste(z);
  } else {
    Tensor q(z.shape());
    for (std::size_t i = 0; i < q.numel(); ++i) q[i] = std::clamp(std::nearbyint(z.value()[i]), -double(kMaxSymbol), double(kMaxSymbol));
    z_hat = constant(std::move(q));
  }
  Hyper h = hyper_decode(z_hat);
  h.z = z;
  return h;
}

EntropyModel::Hyper EntropyModel::hyper_decode(const Var& z_hat) const {
  Hyper h;
  h.z_hat = z_hat;
  h.bits = z_prior_.bits(z_hat);
  h.features = hs3_(leaky_relu(hs2_(leaky_relu(hs1_(z_hat)))));
  return h;
}

std::vector<Var> EntropyModel::fuse(const Var& hyper_features, const Var& ctx) const {
  Var in = hyper_features;
  if (cfg_.ctx_channels > 0) {
    require(ctx.defined(), "em: temporal prior required by this model");
    require(ctx.dim(0) == std::size_t(cfg_.ctx_channels) && ctx.dim(1) == in.dim(1) && ctx.dim(2) == in.dim(2),
            "em: temporal prior shape " + shape_str(ctx.shape()));
    in = concat({hyper_features, ctx});
  }
  const Var phi = fuse2_(leaky_relu(fuse1_(in)));
  std::vector<Var> out;
  for (int n = 0; n < cfg_.slices; ++n) {
    out.push_back(narrow(phi, 0, std::size_t(n * cfg_.phi_channels), std::size_t(cfg_.phi_channels)));
  }
  return out;
}

Var EntropyModel::align_cross_view(View view, int n, const SliceStore& store, const Var& anchor,
                                   const EmSwitches& sw) const {
  const int q = cross_view_count(view, n);
  const std::size_t h = anchor.dim(1), w = anchor.dim(2);
  if (q == 0 || !sw.cross_view) return constant(Tensor({std::size_t(cfg_.prior_width), h, w}));
  const auto& others = store.y_hat[std::size_t(other(view))];
  require(int(others.size()) >= q, "em: cross-view slice missing");
  std::vector<Var> prev;
  for (int i = 0; i < q; ++i) {
    if (!others[std::size_t(i)].defined()) throw std::logic_error("em: cross-view slice not yet coded");
    prev.push_back(others[std::size_t(i)]);
  }
  for (const auto& s : prev) {
    require(s.dim(1) == h && s.dim(2) == w, "align_cross_view: spatial mismatch");
  }
  const auto& sn = nets(view, n);
  const Var other_p = sn.proj_other(concat(prev));
  const Var anchor_p = sn.proj_anchor(anchor);

  const bool no_shift = sw.align_mode == fer::Ablation::kNoShift;
  const int d = no_shift ? 1 : cfg_.d_feat, first = no_shift ? 0 : 1;
  const Var& left_src = view == View::kLeft ? anchor_p : other_p;
  const Var& right_src = view == View::kLeft ? other_p : anchor_p;
  const Var vl = hdc_ops::shift_volume(left_src, ShiftSign::kPlus, d, first);
  const Var vr = hdc_ops::shift_volume(right_src, ShiftSign::kMinus, d, first);
  Var fs;
  if (sw.align_mode != fer::Ablation::kNoAttention) fs = hdc_ops::attention_score(hdc_ops::similarity(vl, vr));
  const Var w_agg = no_shift ? narrow(sn.agg_w, 1, 0, std::size_t(cfg_.prior_width)) : sn.agg_w;
  return hdc_ops::aggregate(fs, view == View::kLeft ? vr : vl, w_agg, sn.agg_b);
}

std::pair<Var, Var> EntropyModel::estimate(View view, int n, const SliceStore& store, const std::vector<Var>& phi,
                                           const EmSwitches& sw) const {
  require(n >= 1 && n <= cfg_.slices, "em: slice index out of range");
  const Var& anchor = phi.at(std::size_t(n - 1));
  std::vector<Var> parts{align_cross_view(view, n, store, anchor, sw)};
  const auto& own = store.y_hat[std::size_t(view)];
  for (int i = 0; i < n - 1; ++i) {
    if (std::size_t(i) >= own.size() || !own[std::size_t(i)].defined()) {
      throw std::logic_error("em: own slice not yet coded");
    }
    parts.push_back(own[std::size_t(i)]);
  }
  parts.push_back(anchor);
  const auto& sn = nets(view, n);
  const Var out = sn.est3(leaky_relu(sn.est2(leaky_relu(sn.est1(concat(parts))))));
  const std::size_t cs = std::size_t(cfg_.slice_channels());
  return {narrow(out, 0, 0, cs), lower_bound(narrow(out, 0, cs, cs), cfg_.sigma_min)};
}

EmOutput EntropyModel::run(CoderMode mode, const std::array<Var, 2>& y, const std::array<Var, 2>& ctx,
                           const EmSwitches& sw, const SymbolChannel* io,
                           const std::array<std::vector<std::int32_t>, 2>* hyper_z, Shape latent_shape) const {
  std::optional<NoGradGuard> no_grad;
  if (mode != CoderMode::kTrain) no_grad.emplace();
  if (mode == CoderMode::kDecode) {
    require(io && io->get && hyper_z, "em: decode needs a symbol source and hyper symbols");
    require(latent_shape.size() == 3, "em: decode needs the latent shape");
  } else {
    require(y[0].defined() && y[1].defined() && y[0].shape() == y[1].shape(), "em: view latents differ in shape");
    latent_shape = y[0].shape();
  }
  require(latent_shape[0] == std::size_t(cfg_.latent_channels), "em: latent channel count mismatch");
  const std::size_t h = latent_shape[1], w = latent_shape[2];
  const std::size_t cs = std::size_t(cfg_.slice_channels());
  const Shape slice_shape{cs, h, w};

  EmOutput out;
  std::array<std::vector<Var>, 2> phi;
  std::array<std::vector<Var>, 2> y_slices;
  for (int v = 0; v < 2; ++v) {
    Hyper hp;
    if (mode == CoderMode::kDecode) {
      const Shape zs{std::size_t(cfg_.hyper_channels), h / 4, w / 4};
      const auto& zsym = (*hyper_z)[std::size_t(v)];
      if (zsym.size() != shape_numel(zs)) throw std::invalid_argument("em: hyper symbol count mismatch");
      hp = hyper_decode(constant(Tensor(zs, std::vector<double>(zsym.begin(), zsym.end()))));
    } else {
      hp = hyper_encode(y[std::size_t(v)], mode);
      for (std::size_t c = 0; c < cs * std::size_t(cfg_.slices); c += cs) {
        y_slices[std::size_t(v)].push_back(narrow(y[std::size_t(v)], 0, c, cs));
      }
    }
    auto& vo = out.view[std::size_t(v)];
    vo.z_hat = hp.z_hat;
    vo.bits_z = hp.bits;
    if (mode != CoderMode::kTrain) {
      for (double zv : hp.z_hat.value().values()) vo.z_symbols.push_back(std::int32_t(zv));
    }
    phi[std::size_t(v)] = fuse(hp.features, ctx[std::size_t(v)]);
  }

  SliceStore store;
  for (auto& s : store.y_hat) s.resize(std::size_t(cfg_.slices));
  std::array<std::vector<Var>, 2> rates;
  for (const SliceId& id : coding_order(cfg_.slices)) {
    const std::size_t v = std::size_t(id.view), k = std::size_t(id.index - 1);
    auto [mu, sigma] = estimate(id.view, id.index, store, phi[v], sw);
    Var y_hat;
    std::vector<std::int32_t> sym;
    if (mode == CoderMode::kTrain) {
      y_hat = quantize_ste(y_slices[v][k], mu);
    } else {
      Tensor delta(slice_shape);
      if (mode == CoderMode::kEncode) {
        const Tensor& yv = y_slices[v][k].value();
        for (std::size_t i = 0; i < delta.numel(); ++i) {
          delta[i] = std::clamp(std::nearbyint(yv[i] - mu.value()[i]), -double(kMaxSymbol), double(kMaxSymbol));
        }
        sym.assign(delta.numel(), 0);
        for (std::size_t i = 0; i < delta.numel(); ++i) sym[i] = std::int32_t(delta[i]);
        if (io && io->put) io->put(id.view, id.index, sym, sigma.value());
      } else {
        sym = io->get(id.view, id.index, delta.numel(), sigma.value());
        if (sym.size() != delta.numel()) throw std::runtime_error("em: symbol source returned wrong count");
        for (std::size_t i = 0; i < delta.numel(); ++i) delta[i] = double(sym[i]);
      }
      Tensor yh(slice_shape);
      for (std::size_t i = 0; i < yh.numel(); ++i) yh[i] = delta[i] + mu.value()[i];
      y_hat = constant(std::move(yh));
    }
    rates[v].push_back(rate_bits(y_hat, mu, sigma));
    store.y_hat[v][k] = y_hat;
    auto& vo = out.view[v];
    vo.mu.push_back(mu.value());
    vo.sigma.push_back(sigma.value());
    vo.symbols.push_back(std::move(sym));
  }
  for (std::size_t v = 0; v < 2; ++v) {
    auto& vo = out.view[v];
    vo.y_hat = concat(store.y_hat[v]);
    Var total = rates[v][0];
    for (std::size_t k = 1; k < rates[v].size(); ++k) total = add(total, rates[v][k]);
    vo.bits_y = total;
  }
  return out;
}

}  // namespace hdc::em
