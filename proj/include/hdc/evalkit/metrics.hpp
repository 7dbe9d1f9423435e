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

// Distortion and rate metrics and the Bjontegaard delta rate.

#include <cstddef>
#include <limits>
#include <vector>

#include "hdc/codec/gop.hpp"
#include "hdc/tensor.hpp"

namespace hdc::evalkit {

inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

// 10 log10(255^2 / mse); +inf when mse is 0.
double psnr_from_mse(double mse);
// x, x_hat on the 8-bit scale [0, 255]; any matching shape.
double psnr_rgb(const Tensor& x, const Tensor& x_hat);

// total_bits / (frames * views * h * w).
double bpp(double total_bits, std::size_t frames, std::size_t views, std::size_t h, std::size_t w);
double bpp(const codec::Container& c, std::size_t h, std::size_t w);

struct RDPoint {
  double bpp = 0.0;
  double psnr = 0.0;
  bool operator==(const RDPoint&) const = default;
};

// At least four points, finite, bpp > 0, strictly increasing in both bpp
// and PSNR. Points may arrive in any order; they are sorted by bpp.
class RDCurve {
 public:
  RDCurve() = default;
  explicit RDCurve(std::vector<RDPoint> points);
  const std::vector<RDPoint>& points() const { return points_; }
  bool operator==(const RDCurve&) const = default;

 private:
  std::vector<RDPoint> points_;
};

// Percent rate change of test against anchor at equal PSNR, from
// piecewise-cubic Hermite fits of ln(rate) over PSNR integrated on the
// shared PSNR interval. Negative means the test codec needs fewer bits.
// Throws std::domain_error when the PSNR ranges do not overlap.
double bd_rate(const RDCurve& anchor, const RDCurve& test);

}  // namespace hdc::evalkit
