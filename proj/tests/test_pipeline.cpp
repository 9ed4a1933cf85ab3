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

#include "bwa/error.hpp"
#include "bwa/pipeline.hpp"
#include "bwa/synthetic.hpp"

#include <gtest/gtest.h>

#include <random>

namespace bwa {
namespace {

TEST(Activation, ParseAndApply) {
  EXPECT_EQ(parse_activation("none"), Activation::kNone);
  EXPECT_EQ(parse_activation("relu"), Activation::kRelu);
  EXPECT_STREQ(to_string(Activation::kRelu), "relu");
  EXPECT_THROW(parse_activation("gelu"), Error);
  DenseMatrix x(1, 3);
  x(0, 0) = -1.0;
  x(0, 1) = 0.0;
  x(0, 2) = 2.0;
  const DenseMatrix r = apply_activation(x, Activation::kRelu);
  EXPECT_EQ(r(0, 0), 0.0);
  EXPECT_EQ(r(0, 2), 2.0);
  EXPECT_EQ(apply_activation(x, Activation::kNone), x);
}

TEST(RelativeMse, Examples) {
  DenseMatrix ref(1, 2), out(1, 2);
  ref(0, 0) = 3.0;
  ref(0, 1) = 4.0;
  out(0, 0) = 3.0;
  out(0, 1) = 5.0;
  EXPECT_DOUBLE_EQ(relative_mse(out, ref), 1.0 / 25.0);
  EXPECT_EQ(relative_mse(ref, ref), 0.0);
  EXPECT_DOUBLE_EQ(relative_mse(out, DenseMatrix(1, 2)), 34.0);
  EXPECT_THROW(relative_mse(out, DenseMatrix(2, 1)), Error);
}

TEST(RunFloat, ChainsLayers) {
  std::mt19937_64 rng(1);
  const std::vector<DenseMatrix> w{random_gaussian(6, 4, 1.0, rng),
                                   random_gaussian(3, 6, 1.0, rng)};
  const DenseMatrix x = random_gaussian(2, 4, 1.0, rng);
  std::vector<DenseMatrix> inputs, outputs;
  const DenseMatrix y = run_float(w, x, Activation::kRelu, &inputs, &outputs);
  const DenseMatrix h = apply_activation(matmul_transposed(x, w[0]), Activation::kRelu);
  EXPECT_EQ(y, matmul_transposed(h, w[1]));
  ASSERT_EQ(inputs.size(), 2u);
  EXPECT_EQ(inputs[1], h);
  EXPECT_EQ(outputs.back(), y);
}

struct Stack {
  std::vector<DenseMatrix> weights;
  std::vector<DenseMatrix> calib;
};

Stack make_stack(std::mt19937_64 &rng) {
  Stack s;
  s.weights.push_back(random_gaussian(192, 160, 0.08, rng));
  s.weights.push_back(random_gaussian(64, 192, 0.07, rng));
  s.calib.push_back(random_gaussian(96, 160, 1.0, rng));
  s.calib.push_back(random_gaussian(96, 160, 1.0, rng));
  return s;
}

QuantConfig small_config() {
  QuantConfig cfg;
  cfg.group_size = 32;
  cfg.outliers = 32;
  return cfg;
}

TEST(QuantizeStack, TwoLayerMlpTracksFloatOutput) {
  std::mt19937_64 rng(2);
  const Stack s = make_stack(rng);
  const auto results = quantize_stack(s.weights, s.calib, small_config(), Activation::kRelu);
  ASSERT_EQ(results.size(), 2u);
  std::vector<QuantizedLinear> layers;
  for (const auto &r : results) {
    r.layer.validate();
    EXPECT_GT(r.report.hessian_error, 0.0);
    layers.push_back(r.layer);
  }
  const DenseMatrix x = random_gaussian(16, 160, 1.0, rng);
  const double err = relative_mse(run_quantized(layers, x, Activation::kRelu),
                                  run_float(s.weights, x, Activation::kRelu));
  EXPECT_LT(err, 0.3);
}

TEST(QuantizeStack, LaterLayersSeeEarlierOutputs) {
  std::mt19937_64 rng(3);
  const Stack s = make_stack(rng);
  QuantConfig cfg = small_config();
  cfg.balance = false;
  const auto results = quantize_stack(s.weights, s.calib, cfg, Activation::kRelu);
  std::vector<DenseMatrix> hidden;
  for (const auto &x : s.calib)
    hidden.push_back(apply_activation(matmul_transposed(x, s.weights[0]), Activation::kRelu));
  const QuantizeResult direct = quantize_linear(s.weights[1], calibrate(hidden, cfg.damp), cfg);
  EXPECT_EQ(results[1].layer, direct.layer);
}

TEST(QuantizeStack, BalanceStoresCorrections) {
  std::mt19937_64 rng(4);
  const Stack s = make_stack(rng);
  QuantConfig cfg = small_config();
  const auto on = quantize_stack(s.weights, s.calib, cfg, Activation::kNone);
  cfg.balance = false;
  const auto off = quantize_stack(s.weights, s.calib, cfg, Activation::kNone);
  EXPECT_EQ(on[0].layer.plane_corrections.size(), 4u * 4u);
  for (float f : off[0].layer.plane_corrections)
    EXPECT_EQ(f, 1.0f);
  EXPECT_NE(on[0].layer.plane_corrections, off[0].layer.plane_corrections);
}

TEST(QuantizeStack, ShapeErrors) {
  std::mt19937_64 rng(5);
  Stack s = make_stack(rng);
  s.calib.push_back(random_gaussian(4, 100, 1.0, rng));
  EXPECT_THROW(quantize_stack(s.weights, s.calib, small_config(), Activation::kNone), Error);
  EXPECT_THROW(quantize_stack({}, s.calib, small_config(), Activation::kNone), Error);
  const auto ok = quantize_stack(std::span(s.weights).first(1),
                                 std::span(s.calib).first(1), small_config(), Activation::kNone);
  const std::vector<QuantizedLinear> layers{ok[0].layer};
  EXPECT_THROW(run_quantized(layers, DenseMatrix(1, 100), Activation::kNone), Error);
}

} // namespace
} // namespace bwa
