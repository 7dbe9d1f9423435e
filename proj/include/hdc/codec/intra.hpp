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

// Intra (I-frame) codecs. Each view is coded on its own.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hdc/codec/config.hpp"
#include "hdc/em.hpp"
#include "hdc/nn.hpp"

namespace hdc::codec {

struct IntraCoded {
  Tensor x_hat;
  std::vector<std::uint8_t> bytes;
};

class IntraCodec {
 public:
  virtual ~IntraCodec() = default;
  virtual IntraKind kind() const = 0;
  // x: [3, H, W] in [0, 1].
  virtual IntraCoded encode(const Tensor& x) const = 0;
  virtual Tensor decode(std::span<const std::uint8_t> bytes, std::size_t h, std::size_t w, int segment) const = 0;
  // Differentiable reconstruction and bits, for training.
  virtual std::pair<Var, Var> train_forward(const Var& x) const = 0;
};

// 8 bits per sample, 24 bits per pixel.
class PassthroughIntra final : public IntraCodec {
 public:
  IntraKind kind() const override { return IntraKind::kPassthrough; }
  IntraCoded encode(const Tensor& x) const override;
  Tensor decode(std::span<const std::uint8_t> bytes, std::size_t h, std::size_t w, int segment) const override;
  std::pair<Var, Var> train_forward(const Var& x) const override;
};

// Four stride-2 convs down to a factorized-prior latent and back.
class FactorizedIntra final : public IntraCodec {
 public:
  FactorizedIntra(nn::ParamStore& store, const std::string& name, int channels);
  IntraKind kind() const override { return IntraKind::kFactorized; }
  IntraCoded encode(const Tensor& x) const override;
  Tensor decode(std::span<const std::uint8_t> bytes, std::size_t h, std::size_t w, int segment) const override;
  std::pair<Var, Var> train_forward(const Var& x) const override;

 private:
  Var synthesis(const Var& y_hat) const;

  int channels_;
  nn::Conv2d e1_, e2_, e3_, e4_;
  nn::ConvTranspose2d d1_, d2_, d3_, d4_;
  em::FactorizedPrior prior_;
};

std::unique_ptr<IntraCodec> make_intra(const CodecConfig& cfg, nn::ParamStore& store);

}  // namespace hdc::codec
