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

#include "hdc/train/train.hpp"

#include <cmath>
#include <sstream>

namespace hdc::train {

RateTerms rate_terms(const codec::PFrameOut& out) {
  RateTerms r;
  for (std::size_t v = 0; v < 2; ++v) {
    r.bits_y[v] = add(out.mv_em.view[v].bits_y, out.ctx_em.view[v].bits_y);
    r.bits_z[v] = add(out.mv_em.view[v].bits_z, out.ctx_em.view[v].bits_z);
  }
  return r;
}

RDLossBreakdown rd_loss(const codec::Pair& x, const codec::Pair& x_hat, const RateTerms& bits, double lambda) {
  if (!(lambda > 0)) throw std::invalid_argument("rd_loss: lambda must be positive");
  RDLossBreakdown b;
  b.lambda = lambda;
  Var total;
  for (std::size_t v = 0; v < 2; ++v) {
    if (x[v].shape() != x_hat[v].shape() || x[v].shape().size() != 3) throw std::invalid_argument("rd_loss: shape mismatch");
    const double px = double(x[v].dim(1) * x[v].dim(2));
    const Var d = mse(x_hat[v], x[v]);
    const Var ry = scale(bits.bits_y[v], 1.0 / px);
    const Var rz = scale(bits.bits_z[v], 1.0 / px);
    b.distortion[v] = d.value()[0];
    b.rate_y[v] = ry.value()[0];
    b.rate_z[v] = rz.value()[0];
    const Var term = add(add(scale(d, lambda), ry), rz);
    total = v == 0 ? term : add(total, term);
  }
  b.loss = total;
  b.total = total.value()[0];
  return b;
}

void Adam::step(nn::ParamStore& store) {
  auto& items = store.items();
  if (m_.empty()) {
    for (const auto& [name, p] : items) {
      m_.emplace_back(p.shape(), 0.0);
      v_.emplace_back(p.shape(), 0.0);
    }
  }
  if (m_.size() != items.size()) throw std::logic_error("adam: parameter set changed");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, double(t_)), c2 = 1.0 - std::pow(b2_, double(t_));
  for (std::size_t k = 0; k < items.size(); ++k) {
    Var& p = items[k].second;
    if (!p.requires_grad() || !p.has_grad()) continue;
    const Tensor& g = p.grad();
    Tensor& w = p.mutable_value();
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < w.numel(); ++i) {
      m[i] = b1_ * m[i] + (1 - b1_) * g[i];
      v[i] = b2_ * v[i] + (1 - b2_) * g[i] * g[i];
      w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

int StageConfig::default_iterations(int stage) {
  switch (stage) {
    case 1: return 2000;
    case 2: return 1000;
    case 3: return 200;
    case 4: return 1000;
    default: throw std::invalid_argument("stage must be 1-4");
  }
}

StageConfig StageConfig::for_stage(int stage) {
  StageConfig c;
  c.stage = stage;
  c.iterations = default_iterations(stage);
  c.learning_rate = stage == 1 ? 1e-4 : 1e-5;
  return c;
}

namespace {
bool is_fer(const std::string& n) { return n.find(".fer") != std::string::npos; }
bool is_align(const std::string& n) { return n.find(".align.") != std::string::npos; }
}  // namespace

bool StageConfig::trains(const std::string& n) const {
  switch (stage) {
    case 1: return !is_fer(n) && !is_align(n);
    case 2: return !is_fer(n);
    case 3: return is_fer(n);
    case 4: return true;
    default: throw std::invalid_argument("stage must be 1-4");
  }
}

codec::ModelSwitches StageConfig::switches() const {
  if (switches_override) return *switches_override;
  codec::ModelSwitches sw;
  sw.fer = stage >= 3;
  sw.cross_view = stage >= 2;
  return sw;
}

void apply_mask(nn::ParamStore& store, const StageConfig& cfg) {
  for (auto& [name, p] : store.items()) p.set_requires_grad(cfg.trains(name));
}

ClipSource synthetic_source(std::uint64_t seed, const SyntheticOptions& opt) {
  return [seed, opt](std::size_t it, std::size_t k) {
    std::seed_seq seq{std::uint64_t(seed), std::uint64_t(it), std::uint64_t(k)};
    std::mt19937_64 rng(seq);
    return synthetic_clip(rng, opt).frames;
  };
}

ClipLoss clip_loss(const codec::StereoModel& model, const Clip& clip, double lambda, const codec::ModelSwitches& sw,
                   double grad_weight) {
  if (clip.size() < 2) throw std::invalid_argument("clip_loss: need an intra frame and at least one P-frame");
  ClipLoss out;
  codec::DecodedBuffer buf;
  for (std::size_t v = 0; v < 2; ++v) {
    const Tensor& x = v ? clip[0].right : clip[0].left;
    auto [xh, bits] = model.intra().train_forward(constant(x));
    buf.x_hat[v] = detach(xh);
    buf.features[v] = model.intra_features(buf.x_hat[v]);
  }
  const double inv = 1.0 / double(clip.size() - 1);
  for (std::size_t t = 1; t < clip.size(); ++t) {
    const codec::Pair x{constant(clip[t].left), constant(clip[t].right)};
    const codec::PFrameOut p = model.p_frame(em::CoderMode::kTrain, x, buf, sw);
    RDLossBreakdown b = rd_loss(x, p.x_hat, rate_terms(p), lambda);
    if (!std::isfinite(b.total)) {
      std::ostringstream os;
      os << "non-finite loss at frame " << t << ": d=(" << b.distortion[0] << ", " << b.distortion[1] << ") ry=("
         << b.rate_y[0] << ", " << b.rate_y[1] << ") rz=(" << b.rate_z[0] << ", " << b.rate_z[1] << ")";
      throw TrainingError(os.str());
    }
    if (grad_weight != 0.0) scale(b.loss, inv * grad_weight).backward();
    out.loss += b.total * inv;
    out.frames.push_back(std::move(b));
    buf.x_hat = {detach(p.x_hat[0]), detach(p.x_hat[1])};
    buf.features = {detach(p.features[0]), detach(p.features[1])};
  }
  return out;
}

StageResult run_stage(const codec::StereoModel& model, nn::ParamStore& store, const ClipSource& data,
                      const StageConfig& cfg, double lambda, const Progress& progress) {
  if (cfg.iterations < 0 || cfg.batch < 1 || !(cfg.learning_rate > 0)) throw std::invalid_argument("run_stage: bad config");
  apply_mask(store, cfg);
  Adam opt(cfg.learning_rate);
  const codec::ModelSwitches sw = cfg.switches();
  StageResult res;
  for (int it = 0; it < cfg.iterations; ++it) {
    store.zero_grad();
    double loss = 0.0;
    for (int k = 0; k < cfg.batch; ++k) {
      const Clip clip = data(std::size_t(it), std::size_t(k));
      ClipLoss cl;
      try {
        cl = clip_loss(model, clip, lambda, sw, 1.0 / double(cfg.batch));
      } catch (const TrainingError& e) {
        throw TrainingError("stage " + std::to_string(cfg.stage) + " iteration " + std::to_string(it) + ": " + e.what());
      }
      loss += cl.loss / double(cfg.batch);
    }
    opt.step(store);
    res.losses.push_back(loss);
    if (progress) progress(it, loss);
  }
  return res;
}

double evaluate(const codec::StereoModel& model, const std::vector<Clip>& clips, double lambda,
                const codec::ModelSwitches& sw) {
  if (clips.empty()) throw std::invalid_argument("evaluate: no clips");
  NoGradGuard ng;
  double acc = 0.0;
  for (const Clip& c : clips) acc += clip_loss(model, c, lambda, sw).loss;
  return acc / double(clips.size());
}

std::vector<double> smooth(const std::vector<double>& xs, std::size_t window) {
  if (window == 0) throw std::invalid_argument("smooth: zero window");
  std::vector<double> out(xs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    acc += xs[i];
    if (i >= window) acc -= xs[i - window];
    out[i] = acc / double(std::min(i + 1, window));
  }
  return out;
}

}  // namespace hdc::train
