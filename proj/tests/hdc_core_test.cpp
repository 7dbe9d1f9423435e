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

#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <random>

#include "hdc/grad_check.hpp"
#include "hdc/hdc_core.hpp"
#include "support/oracles.hpp"

namespace hdc {
namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> dist(0.0, sd);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

using testing::shifted_sample;

TEST(ShiftVolume, ZeroPadsAtTheRightBoundary) {
  FeatureMap k{Tensor({1, 1, 4}, 1.0)};
  const auto v = build_shift_volume(k, ShiftSign::kPlus, 1);
  ASSERT_EQ(v.data.shape(), (Shape{1, 1, 1, 4}));
  EXPECT_EQ(v.data.vec(), (std::vector<double>{1, 1, 1, 0}));
}

TEST(ShiftVolume, MinusShiftMovesContentRight) {
  FeatureMap k{Tensor({1, 1, 4}, {0, 1, 2, 3})};
  const auto v = build_shift_volume(k, ShiftSign::kMinus, 2);
  const std::vector<double> plane1(v.data.data() + 4, v.data.data() + 8);
  EXPECT_EQ(plane1, (std::vector<double>{0, 0, 0, 1}));
  // Whole volume against index arithmetic.
  for (int d = 0; d < 2; ++d)
    for (int w = 0; w < 4; ++w) EXPECT_EQ(v.data.at(d, 0, 0, w), shifted_sample(k.data, ShiftSign::kMinus, d, 0, 0, w));
}

TEST(ShiftVolume, LastPlaneEmptyWhenDisparityReachesWidth) {
  std::mt19937_64 rng(1);
  FeatureMap k{random_tensor({2, 3, 5}, rng)};
  for (auto sign : {ShiftSign::kPlus, ShiftSign::kMinus}) {
    const auto v = build_shift_volume(k, sign, 5);
    for (int c = 0; c < 2; ++c)
      for (int h = 0; h < 3; ++h)
        for (int w = 0; w < 5; ++w) EXPECT_EQ(v.data.at(4, c, h, w), 0.0);
  }
}

TEST(ShiftVolume, MatchesIndexOracleOnRandomShapes) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 1 + trial % 4, h = 1 + (trial / 4) % 4, w = 1 + trial % 8;
    const int dmax = 1 + trial % w;
    FeatureMap k{random_tensor({std::size_t(c), std::size_t(h), std::size_t(w)}, rng)};
    for (auto sign : {ShiftSign::kPlus, ShiftSign::kMinus}) {
      const auto v = build_shift_volume(k, sign, dmax);
      for (int d = 0; d < dmax; ++d)
        for (int ci = 0; ci < c; ++ci)
          for (int r = 0; r < h; ++r)
            for (int col = 0; col < w; ++col)
              ASSERT_EQ(v.data.at(d, ci, r, col), shifted_sample(k.data, sign, d, ci, r, col));
    }
  }
}

TEST(ShiftVolume, RejectsBadArguments) {
  FeatureMap k{Tensor({1, 2, 2}, 1.0)};
  EXPECT_THROW(build_shift_volume(k, ShiftSign::kPlus, 0), std::invalid_argument);
  k.data[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(build_shift_volume(k, ShiftSign::kPlus, 1), std::invalid_argument);
  k.data[1] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(build_shift_volume(k, ShiftSign::kMinus, 1), std::invalid_argument);
}

TEST(SimilarityMap, ElementwiseProduct) {
  DisparityVolume ones{Tensor({2, 1, 2, 2}, 1.0)};
  EXPECT_EQ(similarity_map(ones, ones).data.vec(), std::vector<double>(8, 1.0));

  std::mt19937_64 rng(3);
  DisparityVolume a{random_tensor({2, 1, 2, 2}, rng)}, b{random_tensor({2, 1, 2, 2}, rng)};
  a.data[5] = 0.0;
  const auto f = similarity_map(a, b);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(f.data[i], a.data[i] * b.data[i]);
  EXPECT_EQ(f.data[5], 0.0);

  DisparityVolume wrong{Tensor({1, 1, 2, 2})};
  EXPECT_THROW(similarity_map(a, wrong), std::invalid_argument);
}

TEST(NormalizeScore, ZeroMapsToThreeFifths) {
  const auto s = normalize_score({Tensor({1, 1, 1, 3}, 0.0)});
  for (double v : s.data.values()) EXPECT_NEAR(v, 0.6, 1e-12);
}

TEST(NormalizeScore, VanishesForLargeNegativeInputs) {
  const auto s = normalize_score({Tensor({1, 1, 1, 1}, -50.0)});
  EXPECT_GT(s.data[0], 0.0);
  EXPECT_LT(s.data[0], 1e-20);
}

TEST(NormalizeScore, MatchesExtendedPrecisionOracle) {
  using Big = boost::multiprecision::cpp_bin_float_50;
  const Big x("3.7");
  const Big want = tanh(log1p(exp(x)));
  const auto s = normalize_score({Tensor({1, 1, 1, 1}, 3.7)});
  EXPECT_NEAR(s.data[0], want.convert_to<double>(), 1e-12);
}

TEST(NormalizeScore, OpenUnitIntervalAndMonotone) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> dist(-900.0, 900.0);
  Tensor f({1, 1, 1, 20000});
  for (auto& v : f.values()) v = dist(rng);
  f[0] = -1e300;
  f[1] = 1e300;
  const auto s = normalize_score({f});
  for (double v : s.data.values()) {
    ASSERT_GT(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < f.numel(); ++i) pairs.emplace_back(f[i], s.data[i]);
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t i = 1; i < pairs.size(); ++i) ASSERT_GE(pairs[i].second, pairs[i - 1].second);
}

// Direct nested-loop 1x3x3 convolution with full disparity reduction.
Tensor aggregate_oracle(const Tensor& fs, const Tensor& v, const Tensor& w, const Tensor& b) {
  const int d = int(v.dim(0)), c = int(v.dim(1)), h = int(v.dim(2)), wd = int(v.dim(3));
  Tensor out({std::size_t(c), std::size_t(h), std::size_t(wd)});
  for (int o = 0; o < c; ++o)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < wd; ++j) {
        double acc = b[o];
        for (int dd = 0; dd < d; ++dd)
          for (int a = 0; a < c; ++a)
            for (int kh = 0; kh < 3; ++kh)
              for (int kw = 0; kw < 3; ++kw) {
                const int y = i + kh - 1, x = j + kw - 1;
                if (y < 0 || y >= h || x < 0 || x >= wd) continue;
                acc += w.at(o, dd * c + a, kh, kw) * fs.at(dd, a, y, x) * v.at(dd, a, y, x);
              }
        out.at(o, i, j) = acc;
      }
  return out;
}

TEST(Aggregate, ZeroScoreGivesBiasOnly) {
  std::mt19937_64 rng(5);
  DisparityVolume v{random_tensor({3, 2, 4, 4}, rng)};
  AggregatorParams p{random_tensor({2, 6, 3, 3}, rng), Tensor({2}, {0.25, -1.5})};
  const auto out = aggregate({Tensor({3, 2, 4, 4}, 0.0)}, v, p);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 16; ++i) EXPECT_EQ(out.data[c * 16 + i], p.bias[c]);
}

TEST(Aggregate, UnitCentreTapsSumOverDisparity) {
  std::mt19937_64 rng(6);
  const std::size_t d = 3, c = 2;
  DisparityVolume v{random_tensor({d, c, 3, 5}, rng)};
  AggregatorParams p{Tensor({c, d * c, 3, 3}), Tensor({c})};
  for (std::size_t o = 0; o < c; ++o)
    for (std::size_t dd = 0; dd < d; ++dd) p.weight.at(o, dd * c + o, 1, 1) = 1.0;
  const auto out = aggregate({Tensor({d, c, 3, 5}, 1.0)}, v, p);
  for (std::size_t o = 0; o < c; ++o)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        double want = 0;
        for (std::size_t dd = 0; dd < d; ++dd) want += v.data.at(dd, o, i, j);
        EXPECT_NEAR(out.data.at(o, i, j), want, 1e-15);
      }
}

TEST(Aggregate, MatchesNestedLoopConvolution) {
  std::mt19937_64 rng(7);
  DisparityVolume fs{random_tensor({2, 2, 3, 3}, rng)}, v{random_tensor({2, 2, 3, 3}, rng)};
  AggregatorParams p{random_tensor({2, 4, 3, 3}, rng), random_tensor({2}, rng)};
  const auto out = aggregate(fs, v, p);
  EXPECT_LT(out.data.max_abs_diff(aggregate_oracle(fs.data, v.data, p.weight, p.bias)), 1e-6);
}

TEST(Aggregate, RejectsIncompatibleParams) {
  DisparityVolume v{Tensor({2, 2, 3, 3})};
  AggregatorParams p{Tensor({2, 3, 3, 3}), Tensor({2})};
  EXPECT_THROW(aggregate(v, v, p), std::invalid_argument);
  DisparityVolume other{Tensor({1, 2, 3, 3})};
  AggregatorParams ok{Tensor({2, 4, 3, 3}), Tensor({2})};
  EXPECT_THROW(aggregate(other, v, ok), std::invalid_argument);
}

TEST(HdcComposite, SimilarityPeaksAtMatchingPlane) {
  // Left impulse 2k columns right of the right impulse: planes pair
  // left(w + d + 1) with right(w - d - 1), so only plane k - 1 lights up.
  for (int k = 1; k <= 3; ++k) {
    const int width = 16, d_max = 5;
    FeatureMap right{Tensor({1, 1, std::size_t(width)})}, left{Tensor({1, 1, std::size_t(width)})};
    right.data[4] = 1.0;
    left.data[4 + 2 * k] = 1.0;
    const auto vl = build_shift_volume(left, ShiftSign::kPlus, d_max);
    const auto vr = build_shift_volume(right, ShiftSign::kMinus, d_max);
    const auto f = similarity_map(vl, vr);
    const auto fs = normalize_score(f);
    int best_f = -1, best_s = -1;
    double mass_f = -1, mass_s = -1;
    for (int d = 0; d < d_max; ++d) {
      double mf = 0, ms = 0;
      for (int w = 0; w < width; ++w) {
        mf += f.data.at(d, 0, 0, w);
        ms += fs.data.at(d, 0, 0, w);
      }
      if (mf > mass_f) mass_f = mf, best_f = d;
      if (ms > mass_s) mass_s = ms, best_s = d;
    }
    EXPECT_EQ(best_f, k - 1);
    EXPECT_EQ(best_s, k - 1);
  }
}

TEST(HdcComposite, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(8);
  std::vector<Var> in{Var(random_tensor({2, 4, 4}, rng)), Var(random_tensor({2, 4, 4}, rng)),
                      Var(random_tensor({2, 4, 3, 3}, rng, 0.3)), Var(random_tensor({2}, rng))};
  auto fn = [](std::vector<Var>& v) {
    Var vl = hdc_ops::shift_volume(v[0], ShiftSign::kPlus, 2);
    Var vr = hdc_ops::shift_volume(v[1], ShiftSign::kMinus, 2);
    Var fs = hdc_ops::attention_score(hdc_ops::similarity(vl, vr));
    Var ref = hdc_ops::aggregate(fs, vr, v[2], v[3]);
    // Weighted sum so every output element contributes distinctly.
    return sum(mul(ref, ref));
  };
  const auto report = train::grad_check(fn, in, 1e-4, {"KL", "KR", "weight", "bias"});
  EXPECT_LT(report.max_rel_error, 1e-4) << report.worst_input;
}

TEST(HdcComposite, DeterministicBitwise) {
  std::mt19937_64 rng(9);
  FeatureMap l{random_tensor({3, 4, 6}, rng)}, r{random_tensor({3, 4, 6}, rng)};
  AggregatorParams p{random_tensor({3, 9, 3, 3}, rng), random_tensor({3}, rng)};
  auto run = [&] {
    const auto vl = build_shift_volume(l, ShiftSign::kPlus, 3);
    const auto vr = build_shift_volume(r, ShiftSign::kMinus, 3);
    return aggregate(normalize_score(similarity_map(vl, vr)), vr, p).data;
  };
  EXPECT_TRUE(run().bitwise_equal(run()));
}

}  // namespace
}  // namespace hdc
