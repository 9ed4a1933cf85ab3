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

#include "bwa/quantized_linear.hpp"

#include "bwa/act_quant.hpp"
#include "bwa/error.hpp"

#include <cmath>

namespace bwa {

double QuantizedLinear::dequantized(std::size_t row, std::size_t p) const {
  const std::size_t nb = binarized_cols();
  if (p >= nb)
    return outliers.dequantize(row, p - nb);
  const std::size_t g = p / group_size;
  const std::size_t i = p % group_size;
  const std::size_t s = mask.test(row, g, i) ? 1 : 0;
  return affine_at(row, g, s).dequantize(signs.test(row, g, i));
}

DenseMatrix QuantizedLinear::dequantize_permuted() const {
  DenseMatrix w(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t p = 0; p < cols; ++p)
      w(r, p) = dequantized(r, p);
  return w;
}

DenseMatrix QuantizedLinear::dequantize() const {
  DenseMatrix w(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t p = 0; p < cols; ++p)
      w(r, perm[p]) = dequantized(r, p);
  return w;
}

QuantizedLinear QuantizedLinear::zeros(uint32_t rows, uint32_t cols, uint32_t group_size,
                                       uint32_t outlier_count) {
  require(group_size > 0 && outlier_count <= cols &&
              (cols - outlier_count) % group_size == 0,
          ErrorCode::kInvalidArgument, "layer geometry: groups must tile non-outlier columns");
  QuantizedLinear l;
  l.rows = rows;
  l.cols = cols;
  l.group_size = group_size;
  l.outlier_count = outlier_count;
  l.perm = identity_permutation(cols);
  const std::size_t g = l.groups();
  l.signs = PackedBits(rows, g, group_size);
  l.mask = PackedBits(rows, g, group_size);
  l.affine.assign(std::size_t{rows} * g * 2, Affine{});
  l.outliers.rows = rows;
  l.outliers.cols = outlier_count;
  l.outliers.codes.assign(std::size_t{rows} * outlier_count, 0);
  l.outliers.params.assign(rows, RtnParams{});
  l.plane_corrections.assign(g * kActPlanes, 1.0f);
  return l;
}

void QuantizedLinear::validate() const {
  require(group_size > 0, ErrorCode::kCorrupt, "group size is zero");
  require(outlier_count <= cols, ErrorCode::kCorrupt, "outlier count exceeds columns");
  require((cols - outlier_count) % group_size == 0, ErrorCode::kCorrupt,
          "non-outlier columns are not a multiple of the group size");
  require(perm.size() == cols && is_permutation(perm), ErrorCode::kCorrupt,
          "channel permutation is not a bijection");
  const std::size_t g = groups();
  for (const PackedBits *bits : {&signs, &mask}) {
    require(bits->rows() == rows && bits->groups() == g && bits->group_bits() == group_size,
            ErrorCode::kCorrupt, "bitplane geometry mismatch");
    require(bits->padding_clear(), ErrorCode::kCorrupt, "nonzero bitplane padding");
  }
  require(affine.size() == std::size_t{rows} * g * 2, ErrorCode::kCorrupt,
          "affine parameter count mismatch");
  for (const Affine &a : affine)
    require(std::isfinite(a.alpha) && std::isfinite(a.beta), ErrorCode::kCorrupt,
            "non-finite affine parameter");
  require(outliers.rows == rows && outliers.cols == outlier_count &&
              outliers.codes.size() == std::size_t{rows} * outlier_count &&
              outliers.params.size() == rows,
          ErrorCode::kCorrupt, "outlier block geometry mismatch");
  for (const RtnParams &p : outliers.params)
    require(std::isfinite(p.scale) && std::isfinite(p.zero), ErrorCode::kCorrupt,
            "non-finite outlier parameter");
  require(plane_corrections.size() == g * kActPlanes, ErrorCode::kCorrupt,
          "plane-scale correction count mismatch");
  for (float c : plane_corrections)
    require(std::isfinite(c), ErrorCode::kCorrupt, "non-finite plane-scale correction");
}

} // namespace bwa
