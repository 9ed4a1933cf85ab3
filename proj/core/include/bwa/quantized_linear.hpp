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

#include <cstdint>
#include <vector>

namespace bwa {

/// Dequantization of one fine-grained subgroup: value = alpha * (2q - 1) + beta.
struct Affine {
  float alpha = 0.0f;
  float beta = 0.0f;

  double dequantize(bool q) const {
    return q ? static_cast<double>(alpha) + static_cast<double>(beta)
             : static_cast<double>(beta) - static_cast<double>(alpha);
  }

  bool operator==(const Affine &) const = default;
};

/// Per-row asymmetric INT8 block.
struct Int8Block {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<uint8_t> codes;    // [row][col]
  std::vector<RtnParams> params; // [row]

  double dequantize(std::size_t r, std::size_t c) const {
    return rtn_dequantize(codes[r * cols + c], params[r]);
  }

  bool operator==(const Int8Block &) const = default;
};

/// A linear layer with 1-bit weights plus a 1-bit subgroup mask.
///
/// Columns are stored in permuted order: permuted column p is original input
/// channel perm[p]. The first binarized_cols() columns form groups of
/// group_size; the last outlier_count columns are INT8.
struct QuantizedLinear {
  uint32_t rows = 0;
  uint32_t cols = 0;
  uint32_t group_size = 0;
  uint32_t outlier_count = 0;
  Permutation perm;

  PackedBits signs; // q bits
  PackedBits mask;  // 1 = subgroup 1
  std::vector<Affine> affine; // [row][group][subgroup]
  Int8Block outliers;
  std::vector<float> plane_corrections; // [group][plane], activation side

  std::size_t binarized_cols() const { return cols - outlier_count; }
  std::size_t groups() const { return group_size ? binarized_cols() / group_size : 0; }

  const Affine &affine_at(std::size_t row, std::size_t group, std::size_t subgroup) const {
    return affine[(row * groups() + group) * 2 + subgroup];
  }
  Affine &affine_at(std::size_t row, std::size_t group, std::size_t subgroup) {
    return affine[(row * groups() + group) * 2 + subgroup];
  }

  /// Weight at permuted column p.
  double dequantized(std::size_t row, std::size_t p) const;

  /// rows x cols, permuted column order.
  DenseMatrix dequantize_permuted() const;
  /// rows x cols, original column order.
  DenseMatrix dequantize() const;

  /// Allocates zeroed storage for the given geometry (identity perm,
  /// unit plane corrections).
  static QuantizedLinear zeros(uint32_t rows, uint32_t cols, uint32_t group_size,
                               uint32_t outlier_count);

  /// Structural invariants; throws Error(kCorrupt) naming the violation.
  void validate() const;

  bool operator==(const QuantizedLinear &) const = default;
};

} // namespace bwa
