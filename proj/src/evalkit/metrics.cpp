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

#include "hdc/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

// Boost 1.74's pchip calls isnan unqualified.
using std::isnan;

#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss.hpp>

namespace hdc::evalkit {

double psnr_from_mse(double mse) {
  if (!(mse >= 0) || !std::isfinite(mse)) throw std::invalid_argument("psnr: mse must be finite and >= 0");
  if (mse == 0) return kPsnrInfinite;
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double psnr_rgb(const Tensor& x, const Tensor& x_hat) {
  if (!x.same_shape(x_hat) || x.empty()) throw std::invalid_argument("psnr_rgb: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double d = x[i] - x_hat[i];
    acc += d * d;
  }
  return psnr_from_mse(acc / double(x.numel()));
}

double bpp(double total_bits, std::size_t frames, std::size_t views, std::size_t h, std::size_t w) {
  const double px = double(frames) * double(views) * double(h) * double(w);
  if (px <= 0) throw std::invalid_argument("bpp: empty pixel count");
  if (!(total_bits >= 0)) throw std::invalid_argument("bpp: negative bits");
  return total_bits / px;
}

double bpp(const codec::Container& c, std::size_t h, std::size_t w) {
  return bpp(double(c.total_bytes()) * 8.0, c.header.frames, 2, h, w);
}

RDCurve::RDCurve(std::vector<RDPoint> points) : points_(std::move(points)) {
  if (points_.size() < 4) throw std::invalid_argument("RD curve needs at least four points");
  for (const auto& p : points_) {
    if (!std::isfinite(p.bpp) || !std::isfinite(p.psnr) || !(p.bpp > 0))
      throw std::invalid_argument("RD curve points must be finite with bpp > 0");
  }
  std::sort(points_.begin(), points_.end(), [](const RDPoint& a, const RDPoint& b) { return a.bpp < b.bpp; });
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i].bpp > points_[i - 1].bpp) || !(points_[i].psnr > points_[i - 1].psnr))
      throw std::invalid_argument("RD curve must increase strictly in bpp and PSNR");
  }
}

namespace {

using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

// Shape-preserving three-point end slope (Fritsch-Carlson, as in the usual
// pchip); Boost's default end slope is only a one-sided secant.
double end_slope(double h0, double h1, double d0, double d1) {
  double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (std::signbit(d) != std::signbit(d0) || d0 == 0) {
    d = 0;
  } else if (std::signbit(d0) != std::signbit(d1) && std::abs(d) > std::abs(3 * d0)) {
    d = 3 * d0;
  }
  return d;
}

Pchip fit(const RDCurve& c) {
  std::vector<double> x, y;
  for (const auto& p : c.points()) {
    x.push_back(p.psnr);
    y.push_back(std::log(p.bpp));
  }
  const std::size_t n = x.size();
  const auto slope = [&](std::size_t k) { return (y[k + 1] - y[k]) / (x[k + 1] - x[k]); };
  const double left = end_slope(x[1] - x[0], x[2] - x[1], slope(0), slope(1));
  const double right = end_slope(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], slope(n - 2), slope(n - 3));
  return Pchip(std::move(x), std::move(y), left, right);
}

// Both fits are cubic between consecutive breakpoints of the merged knot
// set, so Gauss-Legendre with 7 nodes per piece is exact up to rounding.
double integrate(const Pchip& f, const std::vector<double>& knots) {
  double acc = 0.0;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    acc += boost::math::quadrature::gauss<double, 7>::integrate([&](double t) { return f(t); }, knots[i - 1], knots[i]);
  }
  return acc;
}

}  // namespace

double bd_rate(const RDCurve& anchor, const RDCurve& test) {
  const auto& a = anchor.points();
  const auto& t = test.points();
  if (a.empty() || t.empty()) throw std::invalid_argument("bd_rate: empty curve");
  const double lo = std::max(a.front().psnr, t.front().psnr);
  const double hi = std::min(a.back().psnr, t.back().psnr);
  if (!(hi > lo)) throw std::domain_error("bd_rate: PSNR ranges do not overlap");
  std::vector<double> knots{lo, hi};
  for (const auto* c : {&a, &t})
    for (const auto& p : *c)
      if (p.psnr > lo && p.psnr < hi) knots.push_back(p.psnr);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  const double ia = integrate(fit(anchor), knots);
  const double it = integrate(fit(test), knots);
  return (std::exp((it - ia) / (hi - lo)) - 1.0) * 100.0;
}

}  // namespace hdc::evalkit
