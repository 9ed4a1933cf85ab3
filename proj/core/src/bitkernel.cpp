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

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <random>

namespace bwa {

std::size_t popc_and(BitBlockView x, BitBlockView y) {
  require(x.valid_bits == y.valid_bits && x.words.size() == y.words.size(),
          ErrorCode::kShapeMismatch, "popc_and: block lengths differ");
  std::size_t n = 0;
  for (std::size_t w = 0; w < x.words.size(); ++w)
    n += static_cast<std::size_t>(std::popcount(x.words[w] & y.words[w]));
  return n;
}

GroupCounts group_counts(BitBlockView q, BitBlockView b, BitBlockView m) {
  require(q.valid_bits == b.valid_bits && b.valid_bits == m.valid_bits &&
              q.words.size() == b.words.size() && b.words.size() == m.words.size(),
          ErrorCode::kShapeMismatch, "group_counts: block lengths differ");
  GroupCounts c;
  for (std::size_t w = 0; w < q.words.size(); ++w) {
    const uint64_t e = q.words[w] & b.words[w];
    const uint64_t mw = m.words[w];
    c.v1 += static_cast<uint32_t>(std::popcount(e & mw));
    c.v0 += static_cast<uint32_t>(std::popcount(e & ~mw));
    c.r1 += static_cast<uint32_t>(std::popcount(b.words[w] & mw));
    c.r0 += static_cast<uint32_t>(std::popcount(b.words[w] & ~mw));
  }
  return c;
}

void check_compatible(const QuantizedLinear &layer, const ActBitplanes &act) {
  require(act.cols == layer.cols && act.group_size == layer.group_size &&
              act.outlier_count == layer.outlier_count,
          ErrorCode::kShapeMismatch, "activation grouping does not match the layer");
  require(act.perm == layer.perm, ErrorCode::kShapeMismatch,
          "activation permutation does not match the layer");
  for (double s : act.plane_scales)
    require(std::isfinite(s), ErrorCode::kNonFinite, "activation plane scale");
  for (double s : act.shift)
    require(std::isfinite(s), ErrorCode::kNonFinite, "activation shift");
}

PreparedLayer::PreparedLayer(const QuantizedLinear &layer) : layer_(&layer) {
  const std::size_t n_groups = layer.groups();
  params_.resize(std::size_t{layer.rows} * n_groups);
  for (std::size_t j = 0; j < layer.rows; ++j) {
    for (std::size_t g = 0; g < n_groups; ++g) {
      const BitBlockView q = layer.signs.block(j, g);
      const BitBlockView m = layer.mask.block(j, g);
      // Constant plane (every activation bit = 1): r_s is the subgroup size.
      int64_t v0 = 0, v1 = 0, n0 = 0, n1 = 0;
      for (std::size_t w = 0; w < q.words.size(); ++w) {
        v1 += std::popcount(q.words[w] & m.words[w]);
        v0 += std::popcount(q.words[w] & ~m.words[w]);
        n1 += std::popcount(m.words[w]);
      }
      n0 = static_cast<int64_t>(layer.group_size) - n1;
      const Affine &a0 = layer.affine_at(j, g, 0);
      const Affine &a1 = layer.affine_at(j, g, 1);
      GroupParams &p = params_[j * n_groups + g];
      p.alpha0 = a0.alpha;
      p.beta0 = a0.beta;
      p.alpha1 = a1.alpha;
      p.beta1 = a1.beta;
      p.const_term = p.alpha0 * static_cast<double>(2 * v0 - n0) +
                     p.beta0 * static_cast<double>(n0) +
                     p.alpha1 * static_cast<double>(2 * v1 - n1) +
                     p.beta1 * static_cast<double>(n1);
    }
  }
  outlier_code_sum_.assign(layer.rows, 0);
  for (std::size_t j = 0; j < layer.rows; ++j)
    for (std::size_t k = 0; k < layer.outlier_count; ++k)
      outlier_code_sum_[j] += layer.outliers.codes[j * layer.outlier_count + k];
}

DenseMatrix PreparedLayer::forward(const ActBitplanes &act) const {
  const QuantizedLinear &layer = *layer_;
  check_compatible(layer, act);
  const std::size_t n_groups = layer.groups();
  const std::size_t wpg = layer.signs.words_per_group();
  const std::size_t kout = layer.outlier_count;
  DenseMatrix y(act.tokens, layer.rows);

  // popc(b) per (group, plane) of the current token.
  std::vector<int32_t> plane_pop(n_groups * kActPlanes);

  for (std::size_t t = 0; t < act.tokens; ++t) {
    for (std::size_t g = 0; g < n_groups; ++g)
      for (std::size_t a = 0; a < kActPlanes; ++a) {
        const BitBlockView b = act.planes[a].block(t, g);
        int32_t n = 0;
        for (uint64_t w : b.words)
          n += std::popcount(w);
        plane_pop[g * kActPlanes + a] = n;
      }

    int64_t act_code_sum = 0;
    const uint8_t *xc = act.outlier_codes.data() + t * kout;
    for (std::size_t k = 0; k < kout; ++k)
      act_code_sum += xc[k];

    for (std::size_t j = 0; j < layer.rows; ++j) {
      double acc = 0.0;
      for (std::size_t g = 0; g < n_groups; ++g) {
        const GroupParams &p = params_[j * n_groups + g];
        const uint64_t *q = layer.signs.block(j, g).words.data();
        const uint64_t *m = layer.mask.block(j, g).words.data();
        acc += act.group_shift(t, g) * p.const_term;
        for (std::size_t a = 0; a < kActPlanes; ++a) {
          const uint64_t *b = act.planes[a].block(t, g).words.data();
          int32_t ve = 0, v1 = 0, r1 = 0;
          for (std::size_t w = 0; w < wpg; ++w) {
            const uint64_t e = q[w] & b[w];
            ve += std::popcount(e);
            v1 += std::popcount(e & m[w]);
            r1 += std::popcount(b[w] & m[w]);
          }
          const int32_t v0 = ve - v1;
          const int32_t r0 = plane_pop[g * kActPlanes + a] - r1;
          const double term = p.alpha0 * static_cast<double>(2 * v0 - r0) +
                              p.beta0 * static_cast<double>(r0) +
                              p.alpha1 * static_cast<double>(2 * v1 - r1) +
                              p.beta1 * static_cast<double>(r1);
          acc += act.plane_scale(t, g, a) * term;
        }
      }
      if (kout > 0) {
        const uint8_t *wc = layer.outliers.codes.data() + j * kout;
        int64_t dot = 0;
        for (std::size_t k = 0; k < kout; ++k)
          dot += static_cast<int32_t>(wc[k]) * static_cast<int32_t>(xc[k]);
        const RtnParams wp = layer.outliers.params[j];
        const RtnParams xp = act.outlier_params[t];
        const double zw = wp.zero;
        const double zx = xp.zero;
        const double centered = static_cast<double>(dot) -
                                zx * static_cast<double>(outlier_code_sum_[j]) -
                                zw * static_cast<double>(act_code_sum) +
                                static_cast<double>(kout) * zw * zx;
        acc += static_cast<double>(wp.scale) * static_cast<double>(xp.scale) * centered;
      }
      y(t, j) = acc;
    }
  }
  return y;
}

DenseMatrix forward(const QuantizedLinear &layer, const ActBitplanes &act) {
  return PreparedLayer(layer).forward(act);
}

DenseMatrix forward_reference(const QuantizedLinear &layer, const ActBitplanes &act) {
  check_compatible(layer, act);
  return matmul_transposed(act.dequantize(), layer.dequantize_permuted());
}

namespace {

double median_ms(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <class F> std::vector<double> time_runs(F &&fn, std::size_t iters) {
  fn();
  std::vector<double> ms;
  ms.reserve(iters);
  for (std::size_t i = 0; i < iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count());
  }
  return ms;
}

} // namespace

std::vector<BenchRow> bench_forward(std::span<const BenchShape> shapes, std::size_t iters,
                                    uint64_t seed) {
  iters = std::max<std::size_t>(iters, 20);
  std::mt19937_64 rng(seed);
  std::vector<BenchRow> rows;
  for (const BenchShape &s : shapes) {
    require(s.tokens > 0 && s.in > 0 && s.out > 0, ErrorCode::kInvalidArgument,
            "bench shape dimensions must be positive");
    const uint32_t bsz = 128;
    uint32_t k = s.in > 128 && (s.in - 128) % bsz == 0 ? 128 : 0;
    require((s.in - k) % bsz == 0, ErrorCode::kInvalidArgument,
            "bench input width must be a multiple of 128");
    const QuantizedLinear layer = random_layer(static_cast<uint32_t>(s.out),
                                               static_cast<uint32_t>(s.in), bsz, k, rng);
    const DenseMatrix x = random_gaussian(s.tokens, s.in, 1.0, rng);
    const ActBitplanes act = quantize_activations(x, {layer.perm, bsz, k});
    const PreparedLayer prepared(layer);

    std::vector<float> xf(x.data().begin(), x.data().end());
    std::vector<float> wf(s.out * s.in);
    std::normal_distribution<float> nd(0.0f, 0.02f);
    for (float &v : wf)
      v = nd(rng);
    std::vector<float> yf(s.tokens * s.out);

    volatile double sink = 0.0;
    const auto fwd = time_runs(
        [&] {
          DenseMatrix y = prepared.forward(act);
          sink = sink + y(0, 0);
        },
        iters);
    const auto gemm = time_runs(
        [&] {
          for (std::size_t t = 0; t < s.tokens; ++t)
            for (std::size_t j = 0; j < s.out; ++j) {
              float acc = 0.0f;
              const float *xr = xf.data() + t * s.in;
              const float *wr = wf.data() + j * s.in;
              for (std::size_t i = 0; i < s.in; ++i)
                acc += xr[i] * wr[i];
              yf[t * s.out + j] = acc;
            }
          sink = sink + yf[0];
        },
        iters);

    BenchRow row;
    row.shape = s;
    row.forward_ms = median_ms(fwd);
    row.gemm_ms = median_ms(gemm);
    row.speedup = row.forward_ms > 0.0 ? row.gemm_ms / row.forward_ms : 0.0;
    rows.push_back(row);
  }
  return rows;
}

} // namespace bwa
