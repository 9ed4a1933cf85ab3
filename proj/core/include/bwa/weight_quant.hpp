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

#include "bwa/calibration.hpp"
#include "bwa/config.hpp"
#include "bwa/dense_matrix.hpp"
#include "bwa/quantized_linear.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace bwa {

/// Four cluster centers of one row-group, indexed by (subgroup s, sign q).
struct GroupCenters {
  std::array<double, 4> c{};

  double &at(unsigned s, unsigned q) { return c[2 * s + q]; }
  double at(unsigned s, unsigned q) const { return c[2 * s + q]; }
};

/// Element assignment packed as 2 * s + q.
using ClusterCode = uint8_t;

inline unsigned subgroup_of(ClusterCode code) { return code >> 1; }
inline unsigned sign_of(ClusterCode code) { return code & 1u; }

/// Weighted inverse-CDF quantiles at 1/8, 3/8, 5/8, 7/8. Subgroup 0 takes
/// the inner pair, subgroup 1 the outer pair. Needs at least 4 elements and
/// strictly positive weights.
GroupCenters init_centers(std::span<const double> w, std::span<const double> hw);

/// Nearest center per element; ties resolve to the smaller code. With
/// subgroups == 1 only the subgroup-0 centers are candidates.
std::vector<ClusterCode> e_step(std::span<const double> w, std::span<const double> hw,
                                const GroupCenters &centers, unsigned subgroups = 2);

/// Weighted mean of every non-empty cluster; empty clusters keep the center
/// from `previous`.
GroupCenters m_step(std::span<const double> w, std::span<const double> hw,
                    std::span<const ClusterCode> codes, const GroupCenters &previous);

/// Orders each subgroup so at(s,1) >= at(s,0), flipping the sign bit of the
/// affected assignments.
void canonicalize(GroupCenters &centers, std::span<ClusterCode> codes);

/// sum_i hw_i * (w_i - center(code_i))^2
double em_loss(std::span<const double> w, std::span<const double> hw,
               std::span<const ClusterCode> codes, const GroupCenters &centers);

struct EmResult {
  std::vector<ClusterCode> codes;
  GroupCenters centers;
  double loss = 0.0;
  /// Loss after each E-step and each M-step, in order.
  std::vector<double> loss_history;
};

EmResult em_binarize(std::span<const double> w, std::span<const double> hw, std::size_t iters,
                     unsigned subgroups = 2);

/// alpha_s = (c(s,1) - c(s,0)) / 2, beta_s = (c(s,1) + c(s,0)) / 2.
std::array<Affine, 2> recover_affine(const GroupCenters &centers);

/// Applies one block update to the not-yet-quantized columns:
///   w[:, block_end:remaining_end] -= err * chol_inv[block_begin:block_end, block_end:remaining_end]
/// where err is rows x (block_end - block_begin).
void gptq_compensate(DenseMatrix &w, const DenseMatrix &err, const DenseMatrix &chol_inv,
                     std::size_t block_begin, std::size_t remaining_end);

/// Per-row asymmetric 8-bit RTN.
Int8Block quant_outliers_int8(const DenseMatrix &w_out, double clip = 1.0);

struct QuantizationReport {
  /// tr(dW H dW^T) over binarized columns, dW = W - W_hat in permuted order.
  double hessian_error = 0.0;
  /// sum hw_col * dW^2 with hw = 1/diag((H + lambda I)^-1), binarized columns.
  double diag_weighted_error = 0.0;
  /// Clustering loss per column group, summed over rows.
  std::vector<double> group_loss;
  double seconds = 0.0;
};

struct QuantizeResult {
  QuantizedLinear layer;
  QuantizationReport report;
};

/// Full weight pipeline for one layer (rows = output channels).
QuantizeResult quantize_linear(const DenseMatrix &w, const CalibrationStats &stats,
                               const QuantConfig &cfg);

/// tr(dW H dW^T) restricted to the first ncols columns.
double hessian_weighted_error(const DenseMatrix &w, const DenseMatrix &w_hat,
                              const DenseMatrix &hessian, std::size_t ncols);

} // namespace bwa
