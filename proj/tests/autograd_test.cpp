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

#include "hdc/autograd.hpp"
#include "hdc/grad_check.hpp"

namespace hdc {
namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> dist(0.0, sd);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

// Keeps values away from kinks so finite differences stay valid.
Tensor away_from(Tensor t, double kink, double gap) {
  for (auto& v : t.values())
    if (std::abs(v - kink) < gap) v = kink + (v < kink ? -gap : gap);
  return t;
}

struct OpCase {
  const char* name;
  std::function<Var(std::vector<Var>&)> fn;
  std::vector<Shape> shapes;
};

class OpGradient : public ::testing::TestWithParam<OpCase> {};

TEST_P(OpGradient, MatchesFiniteDifferences) {
  const auto& c = GetParam();
  std::mt19937_64 rng(21);
  std::vector<Var> in;
  for (const auto& s : c.shapes) in.emplace_back(away_from(random_tensor(s, rng), 0.0, 0.05), true);
  Tensor probe = random_tensor({512}, rng);
  auto wrapped = [&](std::vector<Var>& v) {
    Var out = c.fn(v);
    const Var flat = reshape(out, {out.numel()});
    return sum(mul(flat, constant(Tensor({out.numel()}, std::vector<double>(probe.data(), probe.data() + out.numel())))));
  };
  const auto report = train::grad_check(wrapped, in, 1e-5);
  EXPECT_LT(report.max_rel_error, 1e-6) << c.name << " input " << report.worst_input;
}

std::vector<OpCase> cases() {
  return {
      {"add", [](auto& v) { return add(v[0], v[1]); }, {{2, 3}, {2, 3}}},
      {"sub", [](auto& v) { return sub(v[0], v[1]); }, {{2, 3}, {2, 3}}},
      {"mul", [](auto& v) { return mul(v[0], v[1]); }, {{2, 3}, {2, 3}}},
      {"scale", [](auto& v) { return scale(add_scalar(v[0], 0.3), -1.7); }, {{5}}},
      {"leaky_relu", [](auto& v) { return leaky_relu(v[0]); }, {{3, 3}}},
      {"relu", [](auto& v) { return relu(v[0]); }, {{3, 3}}},
      {"sigmoid", [](auto& v) { return sigmoid(v[0]); }, {{7}}},
      {"tanh", [](auto& v) { return tanh(v[0]); }, {{7}}},
      {"softplus", [](auto& v) { return softplus(v[0]); }, {{7}}},
      {"concat", [](auto& v) { return concat({v[0], v[1]}); }, {{1, 2, 2}, {2, 2, 2}}},
      {"narrow0", [](auto& v) { return narrow(v[0], 0, 1, 2); }, {{4, 2, 2}}},
      {"narrow1", [](auto& v) { return narrow(v[0], 1, 2, 3); }, {{2, 6, 2}}},
      {"mean", [](auto& v) { return mean(mul(v[0], v[0])); }, {{3, 4}}},
      {"mse", [](auto& v) { return mse(v[0], v[1]); }, {{3, 4}, {3, 4}}},
      {"conv2d_s1", [](auto& v) { return conv2d(v[0], v[1], v[2], 1, 1); }, {{2, 5, 4}, {3, 2, 3, 3}, {3}}},
      {"conv2d_s2", [](auto& v) { return conv2d(v[0], v[1], v[2], 2, 1); }, {{2, 6, 6}, {3, 2, 3, 3}, {3}}},
      {"conv2d_1x1", [](auto& v) { return conv2d(v[0], v[1], Var(), 1, 0); }, {{3, 3, 3}, {2, 3, 1, 1}}},
      {"conv_t", [](auto& v) { return conv_transpose2d(v[0], v[1], v[2], 2, 1, 0); }, {{2, 3, 3}, {2, 3, 4, 4}, {3}}},
      {"avg_pool2", [](auto& v) { return avg_pool2(v[0]); }, {{2, 4, 6}}},
      {"warp_image", [](auto& v) { return bilinear_warp(v[0], constant(Tensor({2, 4, 5}, 0.37))); }, {{2, 4, 5}}},
  };
}

INSTANTIATE_TEST_SUITE_P(Ops, OpGradient, ::testing::ValuesIn(cases()),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(Autograd, WarpFlowGradientAwayFromGridLines) {
  std::mt19937_64 rng(22);
  std::vector<Var> in{Var(random_tensor({2, 6, 6}, rng), true), Var(Tensor({2, 6, 6}), true)};
  // Fractional flow bounded away from integer offsets and from the border.
  std::uniform_real_distribution<double> frac(0.2, 0.8);
  for (auto& f : in[1].mutable_value().values()) f = frac(rng) * (rng() % 2 ? 1 : -1);
  auto fn = [](std::vector<Var>& v) {
    const Var w = bilinear_warp(v[0], v[1]);
    return sum(mul(w, w));
  };
  const auto report = train::grad_check(fn, in, 1e-6);
  // Border pixels clamp; those flow entries have zero gradient both ways.
  EXPECT_LT(report.max_rel_error, 1e-5) << report.worst_input;
}

TEST(Autograd, WarpWithIntegerFlowShifts) {
  Tensor x({1, 2, 4}, {0, 1, 2, 3, 4, 5, 6, 7});
  Tensor flow({2, 2, 4});
  for (int i = 0; i < 8; ++i) flow[i] = 1.0;  // horizontal +1
  const Var out = bilinear_warp(constant(x), constant(flow));
  EXPECT_EQ(out.value().vec(), (std::vector<double>{1, 2, 3, 3, 5, 6, 7, 7}));
}

TEST(Autograd, StraightThroughOps) {
  Var x(Tensor({4}, {-1.6, -0.4, 0.5, 2.49}), true);
  const Var r = round_ste(x);
  EXPECT_EQ(r.value().vec(), (std::vector<double>{-2, -0, 1, 2}));
  sum(scale(r, 3.0)).backward();
  EXPECT_EQ(x.grad().vec(), std::vector<double>(4, 3.0));

  Var y(Tensor({3}, {-5, 0.5, 5}), true);
  const Var c = clamp_ste(y, -1, 1);
  EXPECT_EQ(c.value().vec(), (std::vector<double>{-1, 0.5, 1}));
  sum(c).backward();
  EXPECT_EQ(y.grad().vec(), std::vector<double>(3, 1.0));
}

TEST(Autograd, LowerBoundPassesGradientThatRaises) {
  Var x(Tensor({3}, {0.01, 0.5, 0.02}), true);
  const Var lb = lower_bound(x, 0.11);
  EXPECT_EQ(lb.value().vec(), (std::vector<double>{0.11, 0.5, 0.11}));
  // d/dx of -(first) + (second) + (third): the first wants x to grow.
  sum(mul(lb, constant(Tensor({3}, {-1.0, 1.0, 1.0})))).backward();
  EXPECT_EQ(x.grad().vec(), (std::vector<double>{-1.0, 1.0, 0.0}));
}

TEST(Autograd, SharedSubgraphAccumulates) {
  Var x(Tensor({2}, {1.5, -2.0}), true);
  const Var y = mul(x, x);
  sum(add(y, mul(y, x))).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 2 * 1.5 + 3 * 1.5 * 1.5);
  EXPECT_DOUBLE_EQ(x.grad()[1], 2 * -2.0 + 3 * 4.0);
}

TEST(Autograd, NoGradGuardRecordsNothing) {
  Var x(Tensor({2}, 1.0), true);
  Var y;
  {
    NoGradGuard ng;
    y = mul(x, x);
  }
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(grad_enabled());
}

}  // namespace
}  // namespace hdc
