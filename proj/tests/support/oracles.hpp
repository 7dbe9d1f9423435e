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

// Independent reference implementations shared by the unit tests and the
// acceptance runner.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hdc/evalkit/metrics.hpp"
#include "hdc/hdc_core.hpp"

namespace hdc::testing {

// Scalar-indexing reference for the shift volume.
inline double shifted_sample(const Tensor& k, ShiftSign sign, int d, int c, int h, int w) {
  const int col = sign == ShiftSign::kPlus ? w + (d + 1) : w - (d + 1);
  if (col < 0 || col >= int(k.dim(2))) return 0.0;
  return k.at(c, h, col);
}

// Monotone cubic Hermite interpolant of ln(rate) over PSNR: weighted
// harmonic-mean interior slopes, three-point shape-preserving end slopes.
struct HermiteOracle {
  std::vector<double> x, y, s;
  explicit HermiteOracle(const evalkit::RDCurve& c) {
    for (const auto& p : c.points()) {
      x.push_back(p.psnr);
      y.push_back(std::log(p.bpp));
    }
    const std::size_t n = x.size();
    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = x[k + 1] - x[k];
      d[k] = (y[k + 1] - y[k]) / h[k];
    }
    s.assign(n, 0.0);
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (d[k - 1] * d[k] > 0) {
        const double w1 = 2 * h[k] + h[k - 1], w2 = h[k] + 2 * h[k - 1];
        s[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
      }
    }
    auto end = [](double h0, double h1, double d0, double d1) {
      double e = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (e * d0 <= 0) return 0.0;
      if (d0 * d1 < 0 && std::abs(e) > 3 * std::abs(d0)) return 3 * d0;
      return e;
    };
    s[0] = end(h[0], h[1], d[0], d[1]);
    s[n - 1] = end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
  }
  double operator()(double q) const {
    std::size_t k = 0;
    while (k + 2 < x.size() && q > x[k + 1]) ++k;
    const double hk = x[k + 1] - x[k], t = (q - x[k]) / hk;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y[k] + (t3 - 2 * t2 + t) * hk * s[k] + (-2 * t3 + 3 * t2) * y[k + 1] +
           (t3 - t2) * hk * s[k + 1];
  }
};

// Trapezoid rule over a uniform grid of the log-rate gap between two
// interpolants, converted to a percentage rate change.
inline double bd_rate_fine_grid(const evalkit::RDCurve& anchor, const evalkit::RDCurve& test, int intervals = 200000) {
  const double lo = std::max(anchor.points().front().psnr, test.points().front().psnr);
  const double hi = std::min(anchor.points().back().psnr, test.points().back().psnr);
  const HermiteOracle fa(anchor), ft(test);
  double acc = 0;
  for (int i = 0; i <= intervals; ++i) {
    const double q = lo + (hi - lo) * i / intervals;
    acc += (i == 0 || i == intervals ? 0.5 : 1.0) * (ft(q) - fa(q));
  }
  return (std::exp(acc / intervals) - 1.0) * 100.0;
}

}  // namespace hdc::testing
