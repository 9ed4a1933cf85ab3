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

#pragma once

#include "bwa/act_quant.hpp"
#include "bwa/bit_block.hpp"
#include "bwa/dense_matrix.hpp"
#include "bwa/quantized_linear.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace bwa {

/// Number of positions set in both blocks.
std::size_t popc_and(BitBlockView x, BitBlockView y);

/// Masked bit counts of one (row, group, plane):
///   v_s = popc(q & b & m_s), r_s = popc(b & m_s), m_1 = m, m_0 = ~m.
struct GroupCounts {
  uint32_t v0 = 0;
  uint32_t v1 = 0;
  uint32_t r0 = 0;
  uint32_t r1 = 0;

  bool operator==(const GroupCounts &) const = default;
};

GroupCounts group_counts(BitBlockView q, BitBlockView b, BitBlockView m);

/// Layer with activation-independent terms precomputed: the constant-plane
/// contribution per (row, group) and the INT8 code sum per row. Holds a
/// reference to the layer, which must outlive it.
class PreparedLayer {
public:
  explicit PreparedLayer(const QuantizedLinear &layer);

  /// tokens x rows output in output-channel order.
  DenseMatrix forward(const ActBitplanes &act) const;

  const QuantizedLinear &layer() const { return *layer_; }

private:
  struct GroupParams {
    double alpha0, beta0, alpha1, beta1;
    double const_term; // sum of dequantized weights in the group
  };

  const QuantizedLinear *layer_;
  std::vector<GroupParams> params_; // [row][group]
  std::vector<int64_t> outlier_code_sum_; // [row]
};

/// Popcount forward pass y = x W^T.
DenseMatrix forward(const QuantizedLinear &layer, const ActBitplanes &act);

/// Dequantize weights and activations, then a plain double matrix product.
DenseMatrix forward_reference(const QuantizedLinear &layer, const ActBitplanes &act);

/// Throws unless act was produced with the layer's permutation and grouping.
void check_compatible(const QuantizedLinear &layer, const ActBitplanes &act);

struct BenchShape {
  std::size_t tokens = 1;
  std::size_t in = 128;
  std::size_t out = 128;
};

struct BenchRow {
  BenchShape shape;
  double forward_ms = 0.0; // median, bit kernel on pre-quantized activations
  double gemm_ms = 0.0;    // median, naive float32 GEMM
  double speedup = 0.0;    // gemm_ms / forward_ms
};

/// Times the bit kernel against a naive float GEMM at each shape. Runs one
/// warm-up and max(iters, 20) timed repetitions, reporting medians. Layers
/// use group size 128 and K = 128 when the input width allows it, else K = 0.
std::vector<BenchRow> bench_forward(std::span<const BenchShape> shapes, std::size_t iters,
                                    uint64_t seed = 42);

} // namespace bwa
