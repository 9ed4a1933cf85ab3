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

#include "bwa/dense_matrix.hpp"

#include <span>
#include <vector>

namespace bwa {

/// Activation statistics gathered from calibration tokens.
///
/// hessian and act_scale are indexed by original channel. chol_inv is the
/// upper Cholesky factor of the damped inverse Hessian in *permuted* channel
/// order.
struct CalibrationStats {
  DenseMatrix hessian;
  DenseMatrix chol_inv;
  std::vector<double> act_scale;
  Permutation perm;
  double damp_lambda = 0.0;
};

/// hessian = 2 * sum_k X_k^T X_k, act_scale = diag(sum_k X_k^T X_k).
/// Each sample is tokens x channels. Only hessian and act_scale are filled.
CalibrationStats accumulate_hessian(std::span<const DenseMatrix> samples);

/// Stable ascending argsort of act_scale. The last K entries are the
/// outlier channels.
Permutation channel_permutation(std::span<const double> act_scale);

/// Original indices of the k channels with the largest activation scale.
std::vector<uint32_t> outlier_channels(std::span<const uint32_t> perm, std::size_t k);

/// Upper factor U with U^T U = (H + lambda I)^-1 for an absolute lambda >= 0.
DenseMatrix inverse_cholesky(const DenseMatrix &hessian, double lambda);

/// inverse_cholesky with lambda = damp_frac * mean(diag(H)). When the
/// diagonal is all zero the damping falls back to lambda = damp_frac.
DenseMatrix damped_inverse_cholesky(const DenseMatrix &hessian, double damp_frac,
                                    double *lambda_out = nullptr);

/// accumulate_hessian + channel_permutation + damped_inverse_cholesky of the
/// permuted Hessian.
CalibrationStats calibrate(std::span<const DenseMatrix> samples, double damp_frac);

/// Completes stats that already carry hessian and act_scale.
void finish_calibration(CalibrationStats &stats, double damp_frac);

} // namespace bwa
