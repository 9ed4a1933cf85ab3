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

#include "bwa/bit_block.hpp"
#include "bwa/dense_matrix.hpp"
#include "bwa/rtn.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace bwa {

inline constexpr std::size_t kActPlanes = 4;

/// One channel group of one token split into four bitplanes.
/// Value of element i is sum_a scales[a] * bit_a(i) + shift.
struct GroupBitplanes {
  std::array<BitBlock, kActPlanes> planes;
  std::array<double, kActPlanes> scales{}; // 2^a * base_scale before balancing
  double base_scale = 0.0;                 // RTN step
  double shift = 0.0;                      // -base_scale * zero

  std::size_t size() const { return planes[0].valid_bits(); }
  uint8_t code(std::size_t i) const;
  double value(std::size_t i) const;
};

/// Splits 4-bit codes into planes with scale 2^a * params.scale and
/// shift -params.scale * params.zero. Codes above 15 are rejected.
GroupBitplanes decompose_bitplanes(std::span<const uint8_t> codes, RtnParams params);

struct BalanceResult {
  GroupBitplanes planes;
  bool applied = false; // false when every code in the group is zero
};

/// Spreads the residual x_fp - reconstruction over the four plane scales:
///   scale_a += mean_i( scale_a * bit_a(i) / (base_scale * code_i) * err_i )
/// where the mean runs over elements with a nonzero code. Bits are unchanged.
BalanceResult balance_scales(std::span<const double> x_fp, const GroupBitplanes &planes);

/// Bitplane form of a token batch for one quantized layer. Channels are
/// already permuted; the first (cols - outliers) are split into groups of
/// group_size, the remaining outliers are INT8 per token.
struct ActBitplanes {
  std::size_t tokens = 0;
  std::size_t cols = 0;
  std::size_t group_size = 0;
  std::size_t outlier_count = 0;
  Permutation perm;

  std::array<PackedBits, kActPlanes> planes; // rows = tokens
  std::vector<double> plane_scales;          // [token][group][plane]
  std::vector<double> shift;                 // [token][group]

  std::vector<uint8_t> outlier_codes;     // [token][outlier]
  std::vector<RtnParams> outlier_params;  // [token]

  std::size_t groups() const { return group_size ? (cols - outlier_count) / group_size : 0; }
  double plane_scale(std::size_t t, std::size_t g, std::size_t a) const {
    return plane_scales[(t * groups() + g) * kActPlanes + a];
  }
  double group_shift(std::size_t t, std::size_t g) const { return shift[t * groups() + g]; }

  /// tokens x cols reconstruction in permuted channel order.
  DenseMatrix dequantize() const;
};

struct ActLayout {
  Permutation perm;
  std::size_t group_size = 0;
  std::size_t outlier_count = 0;
};

/// Dynamic per-(token, group) RTN, bitplane decomposition and INT8 outliers.
/// corrections, when non-empty, holds [group][plane] multiplicative factors
/// applied to the plane scales.
ActBitplanes quantize_activations(const DenseMatrix &x, const ActLayout &layout,
                                  std::span<const float> corrections = {},
                                  int bits = 4, double clip = 1.0);

/// Calibration-time balancing: the mean ratio balanced/initial plane scale
/// per [group][plane] over all calibration tokens. Groups never balanced keep
/// factor 1.
std::vector<float> plane_scale_corrections(const DenseMatrix &calib, const ActLayout &layout,
                                           int bits = 4, double clip = 1.0);

} // namespace bwa
