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

#include "bwa/act_quant.hpp"
#include "bwa/bitkernel.hpp"
#include "bwa/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

struct Fixture {
  bwa::QuantizedLinear layer;
  bwa::DenseMatrix x;
  std::vector<float> w32, x32;
};

Fixture make(std::size_t tokens, std::size_t in, std::size_t out) {
  std::mt19937_64 rng(42);
  const uint32_t k = in > 128 && (in - 128) % 128 == 0 ? 128 : 0;
  Fixture f;
  f.layer = bwa::random_layer(static_cast<uint32_t>(out), static_cast<uint32_t>(in), 128, k, rng);
  f.x = bwa::random_gaussian(tokens, in, 1.0, rng);
  const bwa::DenseMatrix w = f.layer.dequantize();
  f.w32.assign(w.data().begin(), w.data().end());
  f.x32.assign(f.x.data().begin(), f.x.data().end());
  return f;
}

void BM_BitForward(benchmark::State &state) {
  const auto f = make(state.range(0), state.range(1), state.range(2));
  const bwa::PreparedLayer prepared(f.layer);
  const auto act = bwa::quantize_activations(
      f.x, {f.layer.perm, f.layer.group_size, f.layer.outlier_count}, f.layer.plane_corrections);
  for (auto _ : state)
    benchmark::DoNotOptimize(prepared.forward(act));
}

void BM_ActQuantize(benchmark::State &state) {
  const auto f = make(state.range(0), state.range(1), state.range(2));
  const bwa::ActLayout layout{f.layer.perm, f.layer.group_size, f.layer.outlier_count};
  for (auto _ : state)
    benchmark::DoNotOptimize(bwa::quantize_activations(f.x, layout, f.layer.plane_corrections));
}

void BM_FloatGemm(benchmark::State &state) {
  const auto f = make(state.range(0), state.range(1), state.range(2));
  const std::size_t t = state.range(0), in = state.range(1), out = state.range(2);
  std::vector<float> y(t * out);
  for (auto _ : state) {
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t o = 0; o < out; ++o) {
        float acc = 0.0f;
        const float *xr = f.x32.data() + i * in;
        const float *wr = f.w32.data() + o * in;
        for (std::size_t c = 0; c < in; ++c)
          acc += xr[c] * wr[c];
        y[i * out + o] = acc;
      }
    benchmark::DoNotOptimize(y.data());
    benchmark::ClobberMemory();
  }
}

void shapes(benchmark::internal::Benchmark *b) {
  b->Args({1, 4096, 4096})->Args({128, 4096, 4096})->Args({1, 128, 128})->Args({16, 1024, 1024});
  b->Unit(benchmark::kMillisecond);
}

} // namespace

BENCHMARK(BM_BitForward)->Apply(shapes);
BENCHMARK(BM_ActQuantize)->Apply(shapes);
BENCHMARK(BM_FloatGemm)->Apply(shapes);
BENCHMARK_MAIN();
