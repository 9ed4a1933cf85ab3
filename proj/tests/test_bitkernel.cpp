/*
 * Copyright (c) 2026 The bwa Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "bwa/bitkernel.hpp"
#include "bwa/error.hpp"
#include "bwa/synthetic.hpp"

#include "oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string_view>

namespace bwa {
namespace {

// Bit i of the block is character i of the string.
BitBlock bits(std::string_view s) {
  BitBlock b(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    b.set(i, s[i] == '1');
  return b;
}

std::vector<uint8_t> random_bits(std::size_t n, std::mt19937_64 &rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<uint8_t> v(n);
  for (auto &x : v)
    x = coin(rng) ? 1 : 0;
  return v;
}

double max_abs(const DenseMatrix &m) {
  double out = 0.0;
  for (double v : m.data())
    out = std::max(out, std::abs(v));
  return out;
}

void expect_close(const DenseMatrix &a, const DenseMatrix &b) {
  ASSERT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.cols(), b.cols());
  const double scale = max_abs(b);
  for (std::size_t i = 0; i < a.data().size(); ++i)
    EXPECT_LE(std::abs(a.data()[i] - b.data()[i]), 1e-6 + 1e-4 * scale);
}

TEST(PopcAnd, HandExamples) {
  EXPECT_EQ(popc_and(bits("1010").view(), bits("1100").view()), 1u);
  EXPECT_EQ(popc_and(bits("10110").view(), bits("11111").view()), 3u);
  EXPECT_THROW(popc_and(bits("101").view(), bits("1010").view()), Error);
}

TEST(PopcAnd, MatchesBitLoop) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto x = random_bits(128, rng);
    const auto y = random_bits(128, rng);
    std::size_t expect = 0;
    for (std::size_t i = 0; i < 128; ++i)
      expect += x[i] & y[i];
    ASSERT_EQ(popc_and(BitBlock::from_bits(x).view(), BitBlock::from_bits(y).view()), expect);
  }
}

TEST(GroupCounts, HandExample) {
  const GroupCounts c = group_counts(bits("1010").view(), bits("1100").view(),
                                     bits("1100").view());
  EXPECT_EQ(c, (GroupCounts{0, 1, 0, 2}));
}

TEST(GroupCounts, DegenerateMasks) {
  std::mt19937_64 rng(2);
  const BitBlock q = BitBlock::from_bits(random_bits(128, rng));
  const BitBlock b = BitBlock::from_bits(random_bits(128, rng));
  const BitBlock all = BitBlock::from_bits(std::vector<uint8_t>(128, 1));
  const BitBlock none(128);
  const GroupCounts full = group_counts(q.view(), b.view(), all.view());
  EXPECT_EQ(full.v0, 0u);
  EXPECT_EQ(full.r0, 0u);
  EXPECT_EQ(group_counts(q.view(), none.view(), b.view()), GroupCounts{});
  const GroupCounts ones = group_counts(all.view(), all.view(), all.view());
  EXPECT_EQ(ones, (GroupCounts{0, 128, 0, 128}));
}

TEST(GroupCounts, MatchesNaiveOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial) % 200;
    const auto q = random_bits(n, rng), b = random_bits(n, rng), m = random_bits(n, rng);
    const GroupCounts got =
        group_counts(BitBlock::from_bits(q).view(), BitBlock::from_bits(b).view(),
                     BitBlock::from_bits(m).view());
    const oracle::NaiveCounts want = oracle::naive_counts(q, b, m);
    ASSERT_EQ(got.v0, want.v0);
    ASSERT_EQ(got.v1, want.v1);
    ASSERT_EQ(got.r0, want.r0);
    ASSERT_EQ(got.r1, want.r1);
  }
}

TEST(GroupCounts, ZeroPaddingIsInvisible) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    auto q = random_bits(100, rng), b = random_bits(100, rng), m = random_bits(100, rng);
    const GroupCounts short_counts =
        group_counts(BitBlock::from_bits(q).view(), BitBlock::from_bits(b).view(),
                     BitBlock::from_bits(m).view());
    q.resize(128, 0);
    b.resize(128, 0);
    m.resize(128, 0);
    const GroupCounts long_counts =
        group_counts(BitBlock::from_bits(q).view(), BitBlock::from_bits(b).view(),
                     BitBlock::from_bits(m).view());
    ASSERT_EQ(short_counts, long_counts);
  }
}

TEST(GroupCounts, LengthMismatch) {
  EXPECT_THROW(group_counts(bits("10").view(), bits("1").view(), bits("10").view()), Error);
}

ActBitplanes single_token(const std::vector<uint8_t> &codes, double mu, double shift) {
  ActBitplanes act;
  act.tokens = 1;
  act.cols = codes.size();
  act.group_size = codes.size();
  act.perm = identity_permutation(codes.size());
  for (std::size_t a = 0; a < kActPlanes; ++a) {
    act.planes[a] = PackedBits(1, 1, codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i)
      act.planes[a].set(0, 0, i, (codes[i] >> a) & 1u);
    act.plane_scales.push_back(std::ldexp(mu, static_cast<int>(a)));
  }
  act.shift = {shift};
  act.outlier_params.resize(1);
  return act;
}

TEST(Forward, ToyDotProduct) {
  QuantizedLinear layer = QuantizedLinear::zeros(1, 4, 4, 0);
  layer.affine_at(0, 0, 0) = {0.2f, 0.1f};
  layer.signs.set(0, 0, 0, true);
  layer.signs.set(0, 0, 2, true);
  const ActBitplanes act = single_token({1, 2, 3, 4}, 0.5, 0.0);
  const DenseMatrix y = forward(layer, act);
  EXPECT_NEAR(y(0, 0), 0.3, 1e-7);
  EXPECT_NEAR(forward_reference(layer, act)(0, 0), 0.3, 1e-7);
}

TEST(Forward, ZeroLayerGivesZeros) {
  std::mt19937_64 rng(5);
  const QuantizedLinear layer = QuantizedLinear::zeros(8, 160, 32, 32);
  const DenseMatrix x = random_gaussian(3, 160, 1.0, rng);
  const DenseMatrix y = forward(layer, quantize_activations(x, {layer.perm, 32, 32}));
  EXPECT_EQ(max_abs(y), 0.0);
}

TEST(ForwardReference, IdentityLayerReturnsActivations) {
  QuantizedLinear layer = QuantizedLinear::zeros(4, 4, 4, 0);
  for (uint32_t r = 0; r < 4; ++r) {
    layer.affine_at(r, 0, 0) = {0.0f, 0.0f};
    layer.affine_at(r, 0, 1) = {0.5f, 0.5f};
    layer.mask.set(r, 0, r, true);
    layer.signs.set(r, 0, r, true);
  }
  std::mt19937_64 rng(6);
  const DenseMatrix x = random_gaussian(3, 4, 1.0, rng);
  const ActBitplanes act = quantize_activations(x, {layer.perm, 4, 0});
  EXPECT_EQ(forward_reference(layer, act), act.dequantize());
  expect_close(forward(layer, act), act.dequantize());
  const ActBitplanes zero = quantize_activations(DenseMatrix(2, 4), {layer.perm, 4, 0});
  EXPECT_EQ(max_abs(forward_reference(layer, zero)), 0.0);
}

TEST(Forward, MatchesReferenceOnRandomLayers) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const uint32_t b = trial % 2 ? 64 : 128;
    const uint32_t k = trial % 4 < 2 ? 0 : 128;
    const uint32_t groups = 1 + static_cast<uint32_t>(trial) % 3;
    const uint32_t cols = groups * b + k;
    const uint32_t rows = 1 + static_cast<uint32_t>(trial * 7) % 40;
    const QuantizedLinear layer = random_layer(rows, cols, b, k, rng);
    const DenseMatrix x = random_gaussian(1 + trial % 5, cols, 1.0, rng);
    const ActBitplanes act = quantize_activations(x, {layer.perm, b, k});
    expect_close(forward(layer, act), forward_reference(layer, act));
    const PreparedLayer prepared(layer);
    EXPECT_EQ(prepared.forward(act), forward(layer, act));
  }
}

TEST(Forward, LinearInPlaneScales) {
  std::mt19937_64 rng(8);
  const QuantizedLinear layer = random_layer(16, 256, 64, 0, rng);
  const DenseMatrix x = random_gaussian(4, 256, 1.0, rng);
  const ActBitplanes act = quantize_activations(x, {layer.perm, 64, 0});
  ActBitplanes a1 = act, a2 = act, sum = act;
  for (std::size_t i = 0; i < act.plane_scales.size(); ++i) {
    a1.plane_scales[i] = act.plane_scales[i] * 0.75;
    a2.plane_scales[i] = act.plane_scales[i] * 0.5;
    sum.plane_scales[i] = a1.plane_scales[i] + a2.plane_scales[i];
  }
  for (std::size_t i = 0; i < act.shift.size(); ++i) {
    a1.shift[i] = act.shift[i] * 0.75;
    a2.shift[i] = act.shift[i] * 0.5;
    sum.shift[i] = a1.shift[i] + a2.shift[i];
  }
  const DenseMatrix y1 = forward(layer, a1), y2 = forward(layer, a2);
  DenseMatrix added = y1;
  for (std::size_t i = 0; i < added.data().size(); ++i)
    added.data()[i] += y2.data()[i];
  const DenseMatrix ys = forward(layer, sum);
  const double scale = max_abs(ys);
  for (std::size_t i = 0; i < ys.data().size(); ++i)
    EXPECT_LE(std::abs(ys.data()[i] - added.data()[i]), 1e-12 * (1 + scale));
}

TEST(Forward, RejectsIncompatibleInputs) {
  std::mt19937_64 rng(9);
  const QuantizedLinear layer = random_layer(4, 192, 64, 64, rng);
  const DenseMatrix x = random_gaussian(2, 192, 1.0, rng);
  EXPECT_THROW(forward(layer, quantize_activations(x, {layer.perm, 64, 0})), Error);
  EXPECT_THROW(forward(layer, quantize_activations(x, {identity_permutation(192), 64, 64})),
               Error);
  ActBitplanes act = quantize_activations(x, {layer.perm, 64, 64});
  act.plane_scales[1] = NAN;
  EXPECT_THROW(forward(layer, act), Error);
}

TEST(BenchForward, DegenerateShapeCompletes) {
  const std::vector<BenchShape> shapes{{1, 128, 128}};
  const auto rows = bench_forward(shapes, 1);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_GT(rows[0].forward_ms, 0.0);
  EXPECT_GT(rows[0].gemm_ms, 0.0);
  EXPECT_GT(rows[0].speedup, 0.0);
}

} // namespace
} // namespace bwa
