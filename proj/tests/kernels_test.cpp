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

#include <random>

#include "hdc/conv.hpp"
#include "hdc/kernels.hpp"
#include "hdc/tensor.hpp"

namespace hdc {
namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

// Direct nested-loop references.
Tensor naive_conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int s, int p) {
  const int ci = int(x.dim(0)), h = int(x.dim(1)), wd = int(x.dim(2));
  const int co = int(w.dim(0)), k = int(w.dim(2));
  const int ho = (h + 2 * p - k) / s + 1, wo = (wd + 2 * p - k) / s + 1;
  Tensor out({std::size_t(co), std::size_t(ho), std::size_t(wo)});
  for (int o = 0; o < co; ++o)
    for (int i = 0; i < ho; ++i)
      for (int j = 0; j < wo; ++j) {
        double acc = b.empty() ? 0.0 : b[o];
        for (int a = 0; a < ci; ++a)
          for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw) {
              const int y = i * s + kh - p, xx = j * s + kw - p;
              if (y < 0 || y >= h || xx < 0 || xx >= wd) continue;
              acc += w.at(o, a, kh, kw) * x.at(a, y, xx);
            }
        out.at(o, i, j) = acc;
      }
  return out;
}

Tensor naive_conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b, int s, int p, int op) {
  const int ci = int(x.dim(0)), h = int(x.dim(1)), wd = int(x.dim(2));
  const int co = int(w.dim(1)), k = int(w.dim(2));
  const int ho = (h - 1) * s - 2 * p + k + op, wo = (wd - 1) * s - 2 * p + k + op;
  Tensor out({std::size_t(co), std::size_t(ho), std::size_t(wo)});
  for (int o = 0; o < co; ++o)
    for (int i = 0; i < ho; ++i)
      for (int j = 0; j < wo; ++j) out.at(o, i, j) = b.empty() ? 0.0 : b[o];
  for (int a = 0; a < ci; ++a)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < wd; ++j)
        for (int o = 0; o < co; ++o)
          for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw) {
              const int y = i * s + kh - p, xx = j * s + kw - p;
              if (y < 0 || y >= ho || xx < 0 || xx >= wo) continue;
              out.at(o, y, xx) += w.at(a, o, kh, kw) * x.at(a, i, j);
            }
  return out;
}

struct ConvCase {
  int ci, co, h, w, k, s;
};

class ConvOracle : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvOracle, ForwardMatchesNestedLoops) {
  const auto c = GetParam();
  std::mt19937_64 rng(11);
  Tensor x = random_tensor({std::size_t(c.ci), std::size_t(c.h), std::size_t(c.w)}, rng);
  Tensor w = random_tensor({std::size_t(c.co), std::size_t(c.ci), std::size_t(c.k), std::size_t(c.k)}, rng);
  Tensor b = random_tensor({std::size_t(c.co)}, rng);
  const Tensor got = conv::conv2d(x, w, b, c.s, c.k / 2);
  const Tensor want = naive_conv2d(x, w, b, c.s, c.k / 2);
  ASSERT_EQ(got.shape(), want.shape());
  EXPECT_LT(got.max_abs_diff(want), 1e-12);

  Tensor wt = random_tensor({std::size_t(c.ci), std::size_t(c.co), 4, 4}, rng);
  const Tensor up = conv::conv_transpose2d(x, wt, b, 2, 1, 0);
  const Tensor up_want = naive_conv_transpose2d(x, wt, b, 2, 1, 0);
  ASSERT_EQ(up.shape(), up_want.shape());
  EXPECT_LT(up.max_abs_diff(up_want), 1e-12);
}

TEST_P(ConvOracle, BackwardIsAdjointOfForward) {
  // <conv(x), g> = <x, conv^T(g)> and the weight gradient equals the
  // derivative of that bilinear form, checked against nested loops.
  const auto c = GetParam();
  std::mt19937_64 rng(12);
  const int p = c.k / 2;
  Tensor x = random_tensor({std::size_t(c.ci), std::size_t(c.h), std::size_t(c.w)}, rng);
  Tensor w = random_tensor({std::size_t(c.co), std::size_t(c.ci), std::size_t(c.k), std::size_t(c.k)}, rng);
  const Tensor y = conv::conv2d(x, w, Tensor(), c.s, p);
  Tensor g = random_tensor(y.shape(), rng);
  Tensor gx(x.shape()), gw(w.shape()), gb({std::size_t(c.co)});
  conv::conv2d_backward(x, w, g, c.s, p, &gx, &gw, &gb);

  Tensor gw_want(w.shape());
  Tensor gx_want(x.shape());
  const int ho = int(y.dim(1)), wo = int(y.dim(2));
  for (int o = 0; o < c.co; ++o)
    for (int i = 0; i < ho; ++i)
      for (int j = 0; j < wo; ++j)
        for (int a = 0; a < c.ci; ++a)
          for (int kh = 0; kh < c.k; ++kh)
            for (int kw = 0; kw < c.k; ++kw) {
              const int yy = i * c.s + kh - p, xx = j * c.s + kw - p;
              if (yy < 0 || yy >= c.h || xx < 0 || xx >= c.w) continue;
              gw_want.at(o, a, kh, kw) += g.at(o, i, j) * x.at(a, yy, xx);
              gx_want.at(a, yy, xx) += g.at(o, i, j) * w.at(o, a, kh, kw);
            }
  EXPECT_LT(gw.max_abs_diff(gw_want), 1e-10);
  EXPECT_LT(gx.max_abs_diff(gx_want), 1e-10);
  for (int o = 0; o < c.co; ++o) {
    double s = 0;
    for (int i = 0; i < ho * wo; ++i) s += g[o * ho * wo + i];
    EXPECT_NEAR(gb[o], s, 1e-10);
  }

  // Transposed convolution: its input gradient is a strided conv.
  Tensor wt = random_tensor({std::size_t(c.ci), std::size_t(c.co), 4, 4}, rng);
  const Tensor up = conv::conv_transpose2d(x, wt, Tensor(), 2, 1, 0);
  Tensor gu = random_tensor(up.shape(), rng);
  Tensor gxt(x.shape()), gwt(wt.shape());
  conv::conv_transpose2d_backward(x, wt, gu, 2, 1, &gxt, &gwt, nullptr);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < up.numel(); ++i) lhs += up[i] * gu[i];
  for (std::size_t i = 0; i < x.numel(); ++i) rhs += x[i] * gxt[i];
  EXPECT_NEAR(lhs, rhs, 1e-9 * (1 + std::abs(lhs)));
  double rhs_w = 0;
  for (std::size_t i = 0; i < wt.numel(); ++i) rhs_w += wt[i] * gwt[i];
  EXPECT_NEAR(lhs, rhs_w, 1e-9 * (1 + std::abs(lhs)));
}

INSTANTIATE_TEST_SUITE_P(Shapes, ConvOracle,
                         ::testing::Values(ConvCase{1, 1, 4, 4, 3, 1}, ConvCase{2, 3, 5, 7, 3, 1},
                                           ConvCase{3, 2, 8, 8, 3, 2}, ConvCase{4, 4, 9, 6, 3, 2},
                                           ConvCase{2, 5, 6, 13, 1, 1}, ConvCase{3, 3, 8, 10, 5, 2}));

class IsaEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!simd::isa_supported(simd::Isa::kAvx2)) GTEST_SKIP() << "AVX2 not available";
  }
};

TEST_F(IsaEquivalence, ConvolutionsAreBitwiseIdentical) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> sz(3, 19), ch(1, 5);
    const int ci = ch(rng), co = ch(rng), h = sz(rng), w = sz(rng), s = 1 + trial % 2;
    Tensor x = random_tensor({std::size_t(ci), std::size_t(h), std::size_t(w)}, rng);
    Tensor k = random_tensor({std::size_t(co), std::size_t(ci), 3, 3}, rng);
    Tensor b = random_tensor({std::size_t(co)}, rng);
    Tensor kt = random_tensor({std::size_t(ci), std::size_t(co), 4, 4}, rng);
    Tensor y_scalar, y_avx, u_scalar, u_avx, gx_s, gx_a;
    {
      simd::ScopedIsa pin(simd::Isa::kScalar);
      y_scalar = conv::conv2d(x, k, b, s, 1);
      u_scalar = conv::conv_transpose2d(x, kt, b, 2, 1, 0);
      gx_s = Tensor(x.shape());
      conv::conv2d_backward(x, k, y_scalar, s, 1, &gx_s, nullptr, nullptr);
    }
    {
      simd::ScopedIsa pin(simd::Isa::kAvx2);
      y_avx = conv::conv2d(x, k, b, s, 1);
      u_avx = conv::conv_transpose2d(x, kt, b, 2, 1, 0);
      gx_a = Tensor(x.shape());
      conv::conv2d_backward(x, k, y_avx, s, 1, &gx_a, nullptr, nullptr);
    }
    EXPECT_TRUE(y_scalar.bitwise_equal(y_avx)) << "trial " << trial;
    EXPECT_TRUE(u_scalar.bitwise_equal(u_avx)) << "trial " << trial;
    EXPECT_TRUE(gx_s.bitwise_equal(gx_a)) << "trial " << trial;
  }
}

TEST_F(IsaEquivalence, ElementwiseAndReductions) {
  std::mt19937_64 rng(4);
  const auto& s = simd::kernels(simd::Isa::kScalar);
  const auto& a = simd::kernels(simd::Isa::kAvx2);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 64u, 1001u}) {
    Tensor x = random_tensor({n + 1}, rng), y = random_tensor({n + 1}, rng);
    Tensor zs({n + 1}), za({n + 1});
    s.mul(x.data(), y.data(), zs.data(), n);
    a.mul(x.data(), y.data(), za.data(), n);
    EXPECT_TRUE(zs.bitwise_equal(za));
    s.add(x.data(), y.data(), zs.data(), n);
    a.add(x.data(), y.data(), za.data(), n);
    EXPECT_TRUE(zs.bitwise_equal(za));
    Tensor ys = y, ya = y;
    s.axpy(0.37, x.data(), ys.data(), n);
    a.axpy(0.37, x.data(), ya.data(), n);
    EXPECT_TRUE(ys.bitwise_equal(ya));
    const double ds = s.dot(x.data(), y.data(), n), da = a.dot(x.data(), y.data(), n);
    EXPECT_NEAR(ds, da, 1e-12 * (1.0 + double(n)));
  }
}

TEST_F(IsaEquivalence, WeightGradientsAgreeToRounding) {
  std::mt19937_64 rng(5);
  Tensor x = random_tensor({3, 12, 10}, rng);
  Tensor k = random_tensor({4, 3, 3, 3}, rng);
  Tensor g = random_tensor({4, 6, 5}, rng);
  Tensor gs(k.shape()), ga(k.shape());
  {
    simd::ScopedIsa pin(simd::Isa::kScalar);
    conv::conv2d_backward(x, k, g, 2, 1, nullptr, &gs, nullptr);
  }
  {
    simd::ScopedIsa pin(simd::Isa::kAvx2);
    conv::conv2d_backward(x, k, g, 2, 1, nullptr, &ga, nullptr);
  }
  EXPECT_LT(gs.max_abs_diff(ga), 1e-12);
}

}  // namespace
}  // namespace hdc
