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

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <map>
#include <random>

#include "hdc/bitstream.hpp"
#include "hdc/em.hpp"
#include "hdc/grad_check.hpp"
#include "support/em_fuzz.hpp"

namespace hdc::em {
namespace {

using hdc::testing::fuzz_tensor;

double oracle_bin(double delta, double sigma) {
  boost::math::normal nd(0.0, sigma);
  return boost::math::cdf(nd, delta + 0.5) - boost::math::cdf(nd, delta - 0.5);
}

EmConfig small_config(int slices = 4, int ctx = 0) {
  EmConfig c;
  c.latent_channels = 8;
  c.slices = slices;
  c.hyper_channels = 4;
  c.ctx_channels = ctx;
  c.phi_channels = 4;
  c.prior_width = 4;
  c.est_width = 8;
  c.d_feat = 3;
  return c;
}

TEST(Slicing, PartitionsAndReassembles) {
  std::mt19937_64 rng(1);
  const Tensor y = fuzz_tensor({8, 3, 5}, rng, 1.0);
  for (int n : {1, 2, 4, 8}) {
    const auto s = slice_channels(y, n);
    ASSERT_EQ(s.size(), std::size_t(n));
    for (const auto& part : s) EXPECT_EQ(part.dim(0), std::size_t(8 / n));
    EXPECT_TRUE(concat_channels(s).bitwise_equal(y));
  }
  EXPECT_TRUE(slice_channels(y, 1)[0].bitwise_equal(y));
  EXPECT_THROW(slice_channels(fuzz_tensor({6, 2, 2}, rng, 1.0), 4), std::invalid_argument);
}

TEST(CodingOrder, AlternatesViews) {
  const std::vector<SliceId> two{{View::kLeft, 1}, {View::kRight, 1}, {View::kLeft, 2}, {View::kRight, 2}};
  EXPECT_EQ(coding_order(2), two);
  const std::vector<SliceId> one{{View::kLeft, 1}, {View::kRight, 1}};
  EXPECT_EQ(coding_order(1), one);
  EXPECT_THROW(coding_order(0), std::invalid_argument);
  for (int n = 1; n <= 6; ++n) {
    EXPECT_EQ(cross_view_count(View::kLeft, n), n - 1);
    EXPECT_EQ(cross_view_count(View::kRight, n), n);
  }
}

TEST(Quantizer, Examples) {
  const Tensor q = quantize_slice(Tensor({1}, {1.3}), Tensor({1}, {0.1}));
  EXPECT_DOUBLE_EQ(q[0], 1.1);
  EXPECT_EQ(quantize_slice(Tensor({1}, {0.77}), Tensor({1}, {0.77}))[0], 0.77);
}

TEST(Quantizer, ContractOnRandomElements) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> dist(0.0, 20.0);
  Tensor y({100000}), mu({100000});
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = dist(rng), mu[i] = dist(rng) * 0.3;
  const Tensor q = quantize_slice(y, mu);
  const Tensor q2 = quantize_slice(q, mu);
  for (std::size_t i = 0; i < y.numel(); ++i) {
    const double d = q[i] - mu[i];
    ASSERT_LT(std::abs(d - std::round(d)), 1e-9) << i;
    ASSERT_LE(std::abs(q[i] - y[i]), 0.5 + 1e-12) << i;
    ASSERT_EQ(q2[i], q[i]) << i;
  }
}

TEST(Quantizer, StraightThroughGradientIsIdentityOnY) {
  std::mt19937_64 rng(3);
  Var y(fuzz_tensor({2, 3, 3}, rng, 2.0), true), mu(fuzz_tensor({2, 3, 3}, rng, 1.0), true);
  const Var q = quantize_ste(y, mu);
  EXPECT_TRUE(q.value().bitwise_equal(quantize_slice(y.value(), mu.value())));
  const Tensor probe = fuzz_tensor({2, 3, 3}, rng, 1.0);
  sum(mul(q, constant(probe))).backward();
  EXPECT_TRUE(y.grad().bitwise_equal(probe));
  EXPECT_EQ(mu.grad().max_abs_diff(Tensor({2, 3, 3})), 0.0);
}

TEST(Rate, ErfOracleValues) {
  const double p = bin_probability(0.0, 1.0);
  EXPECT_NEAR(p, oracle_bin(0.0, 1.0), 1e-14);
  EXPECT_NEAR(p, 0.382925, 1e-6);
  const double bits = rate_slice(Tensor({1}), {Tensor({1}), Tensor({1}, 1.0)});
  EXPECT_NEAR(bits, -std::log2(oracle_bin(0.0, 1.0)), 1e-12);
  EXPECT_NEAR(bits, 1.3849, 1e-4);

  const double p_min = bin_probability(0.0, kDefaultSigmaMin);
  EXPECT_NEAR(p_min, oracle_bin(0.0, kDefaultSigmaMin), 1e-14);
  EXPECT_GT(p_min, 1.0 - 1e-5);
  EXPECT_LT(-std::log2(p_min), 1e-4);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(-6.0, 6.0), s(0.11, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double dv = d(rng), sv = s(rng);
    const double want = std::max(oracle_bin(dv, sv), kProbFloor);
    ASSERT_NEAR(bin_probability(dv, sv), want, 1e-13 + 1e-10 * want) << dv << " " << sv;
  }
}

TEST(Rate, FloorAppliesToTails) {
  EXPECT_EQ(bin_probability(50.0, 0.2), kProbFloor);
  EXPECT_DOUBLE_EQ(rate_slice(Tensor({1}, 50.0), {Tensor({1}), Tensor({1}, 0.2)}), 16.0);
}

TEST(Rate, NondecreasingInMagnitude) {
  for (double sigma : {0.11, 0.5, 1.0, 3.0, 20.0}) {
    double prev = -1.0;
    for (int k = 0; k <= 200; ++k) {
      const double bits = -std::log2(bin_probability(0.25 * k, sigma));
      ASSERT_GE(bits, prev) << sigma << " " << k;
      prev = bits;
      EXPECT_EQ(bin_probability(0.25 * k, sigma), bin_probability(-0.25 * k, sigma));
    }
  }
}

TEST(Rate, MeanRateMatchesEntropy) {
  for (double sigma : {0.7, 2.0, 6.0}) {
    std::vector<double> probs;
    std::vector<int> support;
    double entropy = 0.0;
    for (int k = -200; k <= 200; ++k) {
      const double p = oracle_bin(k, sigma);
      if (p <= 0) continue;
      support.push_back(k);
      probs.push_back(p);
      entropy -= p * std::log2(p);
    }
    std::mt19937_64 rng(5);
    std::discrete_distribution<int> pick(probs.begin(), probs.end());
    const std::size_t n = 200000;
    Tensor y({n});
    for (std::size_t i = 0; i < n; ++i) y[i] = support[std::size_t(pick(rng))];
    const double mean = rate_slice(y, {Tensor({n}), Tensor({n}, sigma)}) / double(n);
    EXPECT_NEAR(mean / entropy, 1.0, 0.005) << "sigma " << sigma;
  }
}

TEST(Rate, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> off(0.1, 0.4);
  Tensor mu = fuzz_tensor({3, 4, 4}, rng, 1.0), y(mu.shape()), sg(mu.shape());
  std::uniform_real_distribution<double> s(0.3, 3.0);
  for (std::size_t i = 0; i < y.numel(); ++i) {
    // Keep delta off zero, where |delta| has a kink.
    y[i] = mu[i] + double(int(i % 5) - 2) + (i % 2 ? off(rng) : -off(rng));
    sg[i] = s(rng);
  }
  std::vector<Var> in{Var(y, true), Var(mu, true), Var(sg, true)};
  auto fn = [](std::vector<Var>& v) { return rate_bits(v[0], v[1], v[2]); };
  const auto rep = train::grad_check(fn, in, 1e-4, {"y_hat", "mu", "sigma"});
  EXPECT_LT(rep.max_rel_error, 1e-4) << rep.worst_input;
}

TEST(Rate, SigmaLowerBoundGradientPassesUpwards) {
  Var raw(Tensor({2}, {-10.0, -10.0}), true);
  const Var sg = lower_bound(raw, kDefaultSigmaMin);
  EXPECT_EQ(sg.value()[0], kDefaultSigmaMin);
  // Large offsets want a larger sigma; the gradient must reach raw.
  rate_bits(constant(Tensor({2}, {3.0, -2.0})), constant(Tensor({2})), sg).backward();
  EXPECT_LT(raw.grad()[0], 0.0);
  EXPECT_LT(raw.grad()[1], 0.0);
}

// Independent evaluation of the logit network, written out per layer.
double oracle_logit(const FactorizedPrior& fp, int c, double x) {
  auto sp = [](double v) { return std::log1p(std::exp(v)); };
  std::vector<double> cur{x};
  const int f[] = {1, 3, 3, 1};
  for (int k = 0; k < 3; ++k) {
    std::vector<double> next(std::size_t(f[k + 1]));
    for (int i = 0; i < f[k + 1]; ++i) {
      double acc = fp.biases[k].value()[std::size_t(c * f[k + 1] + i)];
      for (int j = 0; j < f[k]; ++j) acc += sp(fp.matrices[k].value()[std::size_t((c * f[k + 1] + i) * f[k] + j)]) * cur[std::size_t(j)];
      if (k < 2) acc += std::tanh(fp.factors[k].value()[std::size_t(c * f[k + 1] + i)]) * std::tanh(acc);
      next[std::size_t(i)] = acc;
    }
    cur = next;
  }
  return cur[0];
}

double oracle_prior(const FactorizedPrior& fp, int c, double z) {
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  return sig(oracle_logit(fp, c, z + 0.5)) - sig(oracle_logit(fp, c, z - 0.5));
}

void randomize_prior(nn::ParamStore& store, std::mt19937_64& rng) {
  for (auto& [name, v] : store.items()) {
    for (auto& x : v.mutable_value().values()) x += std::normal_distribution<double>(0.0, 0.3)(rng);
  }
}

TEST(FactorizedPrior, MatchesOracleAndNormalizes) {
  nn::ParamStore store(7);
  FactorizedPrior fp(store, "zp", 3);
  std::mt19937_64 rng(7);
  randomize_prior(store, rng);
  for (int c = 0; c < 3; ++c) {
    double total = 0.0;
    for (int z = -60; z <= 60; ++z) {
      const double p = fp.probability(c, z);
      total += p;
      if (std::abs(z) < 6) {
        EXPECT_NEAR(p, std::max(oracle_prior(fp, c, z), kProbFloor), 1e-12);
      }
    }
    // Telescoping sum of CDF differences, plus floored tails.
    EXPECT_NEAR(total, 1.0, 2e-3);
  }
}

TEST(FactorizedPrior, ZeroLatentCostsPositiveFiniteBits) {
  nn::ParamStore store(8);
  FactorizedPrior fp(store, "zp", 4);
  const Var bits = fp.bits(constant(Tensor({4, 2, 3})));
  double want = 0.0;
  for (int c = 0; c < 4; ++c) want -= 6 * std::log2(oracle_prior(fp, c, 0.0));
  EXPECT_GT(bits.value()[0], 0.0);
  EXPECT_TRUE(std::isfinite(bits.value()[0]));
  EXPECT_NEAR(bits.value()[0], want, 1e-9);
}

TEST(FactorizedPrior, GradientsMatchFiniteDifferences) {
  nn::ParamStore store(9);
  FactorizedPrior fp(store, "zp", 2);
  std::mt19937_64 rng(9);
  randomize_prior(store, rng);
  std::vector<Var> in{Var(Tensor({2, 2, 2}, {-3, -1, 0, 2, 1, 0, 4, -2}), true)};
  std::vector<std::string> names{"z"};
  for (auto& [name, v] : store.items()) in.push_back(v), names.push_back(name);
  auto fn = [&](std::vector<Var>&) { return fp.bits(in[0]); };
  const auto rep = train::grad_check(fn, in, 1e-5, names);
  EXPECT_LT(rep.max_rel_error, 1e-5) << rep.worst_input;
}

class EntropyModelTest : public ::testing::Test {
 protected:
  void randomize(nn::ParamStore& store, std::uint64_t seed, double sd = 0.3) {
    std::mt19937_64 rng(seed);
    for (auto& [name, v] : store.items()) {
      if (name.find("zprior") != std::string::npos) continue;
      v.mutable_value() = fuzz_tensor(v.shape(), rng, sd);
    }
  }
};

TEST_F(EntropyModelTest, FirstLeftSliceHasZeroPrior) {
  nn::ParamStore store(10);
  EntropyModel em(store, "em", small_config());
  randomize(store, 10);
  std::mt19937_64 rng(10);
  SliceStore s;
  const Var anchor = constant(fuzz_tensor({4, 4, 4}, rng, 1.0));
  const Var prior = em.align_cross_view(View::kLeft, 1, s, anchor, {});
  EXPECT_EQ(prior.shape(), (Shape{4, 4, 4}));
  EXPECT_EQ(prior.value().max_abs_diff(Tensor({4, 4, 4})), 0.0);
}

TEST_F(EntropyModelTest, ZeroAggregatorGivesBiasOnlyPrior) {
  nn::ParamStore store(11);
  EntropyModel em(store, "em", small_config());
  randomize(store, 11);
  auto& sn = const_cast<EntropyModel::SliceNets&>(em.nets(View::kRight, 2));
  sn.agg_w.mutable_value().fill(0.0);
  std::mt19937_64 rng(11);
  SliceStore s;
  for (auto& v : s.y_hat)
    for (int n = 0; n < 4; ++n) v.push_back(constant(fuzz_tensor({2, 4, 4}, rng, 2.0)));
  const Var prior = em.align_cross_view(View::kRight, 2, s, constant(fuzz_tensor({4, 4, 4}, rng, 1.0)), {});
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(prior.value()[c * 16 + i], sn.agg_b.value()[c]);
}

TEST_F(EntropyModelTest, AttentionPeaksAtLatentDisparity) {
  // Impulses two columns apart: plane 0 pairs left(w + 1) with right(w - 1).
  const std::size_t w = 8;
  Tensor l({1, 1, w}), r({1, 1, w});
  l[5] = 1.0;
  r[3] = 1.0;
  const Var vl = hdc_ops::shift_volume(constant(l), ShiftSign::kPlus, 3);
  const Var vr = hdc_ops::shift_volume(constant(r), ShiftSign::kMinus, 3);
  const Var fs = hdc_ops::attention_score(hdc_ops::similarity(vl, vr));
  std::vector<double> mass(3, 0.0);
  for (std::size_t d = 0; d < 3; ++d)
    for (std::size_t i = 0; i < w; ++i) mass[d] += fs.value()[d * w + i];
  EXPECT_GT(mass[0], mass[1]);
  EXPECT_GT(mass[0], mass[2]);
}

TEST_F(EntropyModelTest, EstimatorBoundsSigma) {
  nn::ParamStore store(12);
  EntropyModel em(store, "em", small_config());
  randomize(store, 12);
  std::mt19937_64 rng(12);
  std::vector<Var> phi;
  for (int n = 0; n < 4; ++n) phi.push_back(constant(fuzz_tensor({4, 4, 4}, rng, 1.0)));
  SliceStore s;
  auto& sn = const_cast<EntropyModel::SliceNets&>(em.nets(View::kLeft, 1));
  sn.est3.weight.mutable_value().fill(0.0);
  sn.est3.bias.mutable_value().fill(0.0);
  auto [mu, sigma] = em.estimate(View::kLeft, 1, s, phi, {});
  EXPECT_EQ(mu.value().max_abs_diff(Tensor(mu.shape())), 0.0);
  for (double v : sigma.value().values()) EXPECT_EQ(v, 0.11);
  for (std::size_t c = 2; c < 4; ++c) sn.est3.bias.mutable_value()[c] = -10.0;
  std::tie(mu, sigma) = em.estimate(View::kLeft, 1, s, phi, {});
  for (double v : sigma.value().values()) EXPECT_EQ(v, 0.11);
  const auto again = em.estimate(View::kLeft, 1, s, phi, {});
  EXPECT_TRUE(again.first.value().bitwise_equal(mu.value()));
}

class Causality : public EntropyModelTest, public ::testing::WithParamInterface<int> {};

TEST_P(Causality, PerturbationFuzzerFindsNoViolations) {
  const int n = GetParam();
  nn::ParamStore store(13);
  EntropyModel em(store, "em", small_config(n));
  randomize(store, 13 + std::uint64_t(n));
  const auto rep = testing::causality_fuzz(em, 10, 100 + std::uint64_t(n));
  EXPECT_GT(rep.checks, 0);
  EXPECT_EQ(rep.leaks, 0) << rep.first_failure;
  EXPECT_EQ(rep.missing, 0) << rep.first_failure;
}

INSTANTIATE_TEST_SUITE_P(Slices, Causality, ::testing::Values(1, 2, 4));

TEST_F(EntropyModelTest, SingleSliceCrossViewDependency) {
  // N = 1: the right slice sees the left slice, the left slice sees nothing.
  nn::ParamStore store(14);
  EntropyModel em(store, "em", small_config(1));
  randomize(store, 14);
  std::mt19937_64 rng(14);
  std::vector<Var> phi{constant(fuzz_tensor({4, 4, 4}, rng, 1.0))};
  SliceStore s;
  s.y_hat[0].push_back(constant(fuzz_tensor({8, 4, 4}, rng, 2.0)));
  s.y_hat[1].push_back(Var());
  const auto right = em.estimate(View::kRight, 1, s, phi, {});
  EXPECT_NO_THROW(em.estimate(View::kLeft, 1, SliceStore{}, phi, {}));
  s.y_hat[0][0] = constant(fuzz_tensor({8, 4, 4}, rng, 2.0));
  const auto right2 = em.estimate(View::kRight, 1, s, phi, {});
  EXPECT_FALSE(right.first.value().bitwise_equal(right2.first.value()));
}

struct Coded {
  std::map<std::pair<int, int>, std::vector<std::uint8_t>> segs;
  std::array<std::vector<std::uint8_t>, 2> z;
};

SymbolChannel bypass_writer(Coded& c) {
  SymbolChannel ch;
  ch.put = [&c](View v, int k, const std::vector<std::int32_t>& s, const Tensor&) {
    c.segs[{int(v), k}] = bits::encode_bypass(s);
  };
  return ch;
}

SymbolChannel bypass_reader(const Coded& c) {
  SymbolChannel ch;
  ch.get = [&c](View v, int k, std::size_t n, const Tensor&) {
    const int idx = int(v) * 100 + k;
    return bits::decode_bypass(c.segs.at({int(v), k}), n, idx);
  };
  return ch;
}

TEST_F(EntropyModelTest, EncodeDecodeRoundTripIsBitwise) {
  for (int ctx : {0, 3}) {
    nn::ParamStore store(15);
    EntropyModel em(store, "em", small_config(4, ctx));
    randomize(store, 15);
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t h = 4 * (1 + trial % 2), w = 4 * (1 + trial % 3);
      std::array<Var, 2> y{constant(fuzz_tensor({8, h, w}, rng, 4.0)), constant(fuzz_tensor({8, h, w}, rng, 4.0))};
      std::array<Var, 2> c;
      if (ctx) c = {constant(fuzz_tensor({3, h, w}, rng, 1.0)), constant(fuzz_tensor({3, h, w}, rng, 1.0))};
      Coded coded;
      const auto ch = bypass_writer(coded);
      const EmOutput enc = em.run(CoderMode::kEncode, y, c, {}, &ch);
      std::array<std::vector<std::int32_t>, 2> zs{enc.view[0].z_symbols, enc.view[1].z_symbols};
      const auto rd = bypass_reader(coded);
      const EmOutput dec = em.run(CoderMode::kDecode, {}, c, {}, &rd, &zs, {8, h, w});
      for (int v = 0; v < 2; ++v) {
        ASSERT_TRUE(dec.view[v].y_hat.value().bitwise_equal(enc.view[v].y_hat.value())) << trial;
        ASSERT_EQ(dec.view[v].bits_y.value()[0], enc.view[v].bits_y.value()[0]);
        // Quantizer contract on the coded latents.
        for (std::size_t k = 0; k < 4; ++k) {
          const Tensor& mu = enc.view[v].mu[k];
          for (std::size_t i = 0; i < mu.numel(); ++i) {
            const double yh = enc.view[v].y_hat.value()[k * mu.numel() + i];
            ASSERT_NEAR(yh - mu[i], double(enc.view[v].symbols[k][i]), 1e-9);
          }
        }
      }
      // Additivity of the estimate.
      double sum_slices = 0.0;
      for (int v = 0; v < 2; ++v)
        for (std::size_t k = 0; k < 4; ++k) {
          const Tensor yk = channel_slice(enc.view[v].y_hat.value(), 2 * k, 2);
          sum_slices += rate_slice(yk, {enc.view[v].mu[k], enc.view[v].sigma[k]});
        }
      const double total = enc.total_bits().value()[0];
      EXPECT_NEAR(total, sum_slices + enc.view[0].bits_z.value()[0] + enc.view[1].bits_z.value()[0],
                  1e-9 * total);
    }
  }
}

TEST_F(EntropyModelTest, TruncatedStreamFailsAtFirstExhaustedSlice) {
  nn::ParamStore store(16);
  EntropyModel em(store, "em", small_config());
  randomize(store, 16);
  std::mt19937_64 rng(16);
  std::array<Var, 2> y{constant(fuzz_tensor({8, 4, 4}, rng, 6.0)), constant(fuzz_tensor({8, 4, 4}, rng, 6.0))};
  Coded coded;
  const auto ch = bypass_writer(coded);
  const EmOutput enc = em.run(CoderMode::kEncode, y, {}, {}, &ch);
  std::array<std::vector<std::int32_t>, 2> zs{enc.view[0].z_symbols, enc.view[1].z_symbols};
  auto& seg = coded.segs[{1, 2}];
  seg.resize(seg.size() / 2);
  const auto rd = bypass_reader(coded);
  try {
    em.run(CoderMode::kDecode, {}, {}, {}, &rd, &zs, {8, 4, 4});
    FAIL() << "truncated stream decoded";
  } catch (const bits::DecodeError& e) {
    EXPECT_EQ(e.slice(), 102);
  }
}

TEST_F(EntropyModelTest, SwappedViewSegmentsAreDetected) {
  nn::ParamStore store(17);
  EntropyModel em(store, "em", small_config());
  randomize(store, 17);
  std::mt19937_64 rng(17);
  std::array<Var, 2> y{constant(fuzz_tensor({8, 4, 4}, rng, 6.0)), constant(fuzz_tensor({8, 4, 4}, rng, 6.0))};
  Coded coded;
  const auto ch = bypass_writer(coded);
  const EmOutput enc = em.run(CoderMode::kEncode, y, {}, {}, &ch);
  std::array<std::vector<std::int32_t>, 2> zs{enc.view[0].z_symbols, enc.view[1].z_symbols};
  for (int k = 1; k <= 4; ++k) std::swap(coded.segs[{0, k}], coded.segs[{1, k}]);
  const auto rd = bypass_reader(coded);
  bool detected = false;
  try {
    const EmOutput dec = em.run(CoderMode::kDecode, {}, {}, {}, &rd, &zs, {8, 4, 4});
    detected = !dec.view[0].y_hat.value().bitwise_equal(enc.view[0].y_hat.value());
  } catch (const bits::DecodeError&) {
    detected = true;
  }
  EXPECT_TRUE(detected);
}

TEST_F(EntropyModelTest, HyperPathIsDeterministicAndContextFree) {
  nn::ParamStore store(18);
  EntropyModel em(store, "em", small_config());
  randomize(store, 18);
  std::mt19937_64 rng(18);
  const Var y = constant(fuzz_tensor({8, 8, 8}, rng, 3.0));
  NoGradGuard ng;
  const auto a = em.hyper_encode(y, CoderMode::kEncode), b = em.hyper_encode(y, CoderMode::kEncode);
  EXPECT_TRUE(a.z_hat.value().bitwise_equal(b.z_hat.value()));
  EXPECT_EQ(a.bits.value()[0], b.bits.value()[0]);
  const auto pa = em.fuse(a.features, Var()), pb = em.fuse(b.features, Var());
  for (int n = 0; n < 4; ++n) EXPECT_TRUE(pa[n].value().bitwise_equal(pb[n].value()));
  EXPECT_THROW(EntropyModel(store, "bad", small_config(3)), std::invalid_argument);
}

TEST_F(EntropyModelTest, TrainingPathGradientsReachEveryStage) {
  nn::ParamStore store(19);
  EntropyModel em(store, "em", small_config(2, 2));
  randomize(store, 19, 0.2);
  std::mt19937_64 rng(19);
  std::array<Var, 2> y{Var(fuzz_tensor({8, 4, 4}, rng, 3.0), true), Var(fuzz_tensor({8, 4, 4}, rng, 3.0), true)};
  std::array<Var, 2> c{constant(fuzz_tensor({2, 4, 4}, rng, 1.0)), constant(fuzz_tensor({2, 4, 4}, rng, 1.0))};
  const EmOutput out = em.run(CoderMode::kTrain, y, c, {});
  out.total_bits().backward();
  int touched = 0;
  for (auto& [name, v] : store.items()) touched += v.has_grad() && v.grad().max_abs_diff(Tensor(v.shape())) > 0;
  EXPECT_EQ(touched, int(store.count()));
  EXPECT_GT(y[0].grad().max_abs_diff(Tensor(y[0].shape())), 0.0);
}

}  // namespace
}  // namespace hdc::em
