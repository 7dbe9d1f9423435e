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

#include "hdc/codec/intra.hpp"

#include <algorithm>
#include <cmath>

#include "hdc/bitstream.hpp"

namespace hdc::codec {

IntraCoded PassthroughIntra::encode(const Tensor& x) const {
  IntraCoded out{Tensor(x.shape()), std::vector<std::uint8_t>(x.numel())};
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double q = std::clamp(std::nearbyint(x[i] * 255.0), 0.0, 255.0);
    out.bytes[i] = std::uint8_t(q);
    out.x_hat[i] = q / 255.0;
  }
  return out;
}

Tensor PassthroughIntra::decode(std::span<const std::uint8_t> bytes, std::size_t h, std::size_t w, int segment) const {
  if (bytes.size() != 3 * h * w) throw bits::DecodeError("intra segment has wrong size", segment);
  Tensor x({3, h, w});
  for (std::size_t i = 0; i < x.numel(); ++i) x[i] = double(bytes[i]) / 255.0;
  return x;
}

std::pair<Var, Var> PassthroughIntra::train_forward(const Var& x) const {
  return {constant(encode(x.value()).x_hat), constant(Tensor::scalar(24.0 * double(x.dim(1) * x.dim(2))))};
}

FactorizedIntra::FactorizedIntra(nn::ParamStore& store, const std::string& name, int channels) : channels_(channels) {
  const int c = channels;
  e1_ = nn::Conv2d(store, name + ".e1", 3, c, 3, 2);
  e2_ = nn::Conv2d(store, name + ".e2", c, c, 3, 2);
  e3_ = nn::Conv2d(store, name + ".e3", c, c, 3, 2);
  e4_ = nn::Conv2d(store, name + ".e4", c, c, 3, 2);
  d1_ = nn::ConvTranspose2d(store, name + ".d1", c, c);
  d2_ = nn::ConvTranspose2d(store, name + ".d2", c, c);
  d3_ = nn::ConvTranspose2d(store, name + ".d3", c, c);
  d4_ = nn::ConvTranspose2d(store, name + ".d4", c, 3);
  prior_ = em::FactorizedPrior(store, name + ".prior", c);
}

Var FactorizedIntra::synthesis(const Var& y_hat) const {
  const Var x = d4_(leaky_relu(d3_(leaky_relu(d2_(leaky_relu(d1_(y_hat)))))));
  return clamp_ste(add_scalar(x, 0.5), 0.0, 1.0);
}

IntraCoded FactorizedIntra::encode(const Tensor& x) const {
  NoGradGuard ng;
  const Var y = e4_(leaky_relu(e3_(leaky_relu(e2_(leaky_relu(e1_(constant(x))))))));
  Tensor q(y.shape());
  std::vector<std::int32_t> sym(q.numel());
  for (std::size_t i = 0; i < q.numel(); ++i) {
    q[i] = std::clamp(std::nearbyint(y.value()[i]), -double(em::kMaxSymbol), double(em::kMaxSymbol));
    sym[i] = std::int32_t(q[i]);
  }
  return {synthesis(constant(std::move(q))).value(), bits::encode_bypass(sym)};
}

Tensor FactorizedIntra::decode(std::span<const std::uint8_t> bytes, std::size_t h, std::size_t w, int segment) const {
  NoGradGuard ng;
  const Shape ys{std::size_t(channels_), h / 16, w / 16};
  const auto sym = bits::decode_bypass(bytes, shape_numel(ys), segment);
  return synthesis(constant(Tensor(ys, std::vector<double>(sym.begin(), sym.end())))).value();
}

std::pair<Var, Var> FactorizedIntra::train_forward(const Var& x) const {
  const Var y = e4_(leaky_relu(e3_(leaky_relu(e2_(leaky_relu(e1_(x)))))));
  const Var y_hat = round_ste(y);
  return {synthesis(y_hat), prior_.bits(y_hat)};
}

std::unique_ptr<IntraCodec> make_intra(const CodecConfig& cfg, nn::ParamStore& store) {
  if (cfg.intra == IntraKind::kFactorized) return std::make_unique<FactorizedIntra>(store, "intra", cfg.intra_channels);
  return std::make_unique<PassthroughIntra>();
}

}  // namespace hdc::codec
