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

#include "bwa/calibration.hpp"

#include "bwa/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bwa {

CalibrationStats accumulate_hessian(std::span<const DenseMatrix> samples) {
  require(!samples.empty(), ErrorCode::kInvalidArgument, "no calibration samples");
  const std::size_t channels = samples.front().cols();
  std::size_t tokens = 0;
  for (const auto &x : samples) {
    if (x.cols() != channels)
      fail(ErrorCode::kShapeMismatch, "calibration sample has " + std::to_string(x.cols()) +
                                          " channels, expected " + std::to_string(channels));
    require(all_finite(x.data()), ErrorCode::kNonFinite, "calibration sample");
    tokens += x.rows();
  }
  require(tokens > 0, ErrorCode::kInvalidArgument, "calibration samples hold no tokens");

  DenseMatrix gram(channels, channels);
  for (const auto &x : samples) {
    for (std::size_t t = 0; t < x.rows(); ++t) {
      auto xr = x.row(t);
      for (std::size_t i = 0; i < channels; ++i) {
        const double xi = xr[i];
        if (xi == 0.0)
          continue;
        auto grow = gram.row(i);
        for (std::size_t j = i; j < channels; ++j)
          grow[j] += xi * xr[j];
      }
    }
  }

  CalibrationStats stats;
  stats.hessian = DenseMatrix(channels, channels);
  stats.act_scale.resize(channels);
  for (std::size_t i = 0; i < channels; ++i) {
    stats.act_scale[i] = gram(i, i);
    for (std::size_t j = i; j < channels; ++j) {
      stats.hessian(i, j) = 2.0 * gram(i, j);
      stats.hessian(j, i) = 2.0 * gram(i, j);
    }
  }
  return stats;
}

Permutation channel_permutation(std::span<const double> act_scale) {
  for (double s : act_scale)
    require(!std::isnan(s), ErrorCode::kNonFinite, "activation scale is NaN");
  Permutation perm = identity_permutation(act_scale.size());
  std::stable_sort(perm.begin(), perm.end(),
                   [&](uint32_t a, uint32_t b) { return act_scale[a] < act_scale[b]; });
  return perm;
}

std::vector<uint32_t> outlier_channels(std::span<const uint32_t> perm, std::size_t k) {
  require(k <= perm.size(), ErrorCode::kInvalidArgument, "more outliers than channels");
  return {perm.end() - static_cast<std::ptrdiff_t>(k), perm.end()};
}

DenseMatrix inverse_cholesky(const DenseMatrix &hessian, double lambda) {
  const std::size_t n = hessian.rows();
  require(hessian.cols() == n, ErrorCode::kShapeMismatch, "Hessian must be square");
  require(all_finite(hessian.data()) && std::isfinite(lambda), ErrorCode::kNonFinite,
          "Hessian or damping");
  require(lambda >= 0.0, ErrorCode::kInvalidArgument, "damping must be non-negative");

  // Reverse factorization A = R R^T with R upper triangular; then
  // U = R^-1 is upper and U^T U = A^-1.
  DenseMatrix r(n, n);
  for (std::size_t jj = n; jj-- > 0;) {
    double d = hessian(jj, jj) + lambda;
    for (std::size_t k = jj + 1; k < n; ++k)
      d -= r(jj, k) * r(jj, k);
    if (!(d > 0.0) || !std::isfinite(d))
      fail(ErrorCode::kFactorization,
           "matrix not positive definite at pivot " + std::to_string(jj));
    const double rjj = std::sqrt(d);
    r(jj, jj) = rjj;
    for (std::size_t i = 0; i < jj; ++i) {
      double s = hessian(i, jj);
      for (std::size_t k = jj + 1; k < n; ++k)
        s -= r(i, k) * r(jj, k);
      r(i, jj) = s / rjj;
    }
  }

  DenseMatrix u(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    u(j, j) = 1.0 / r(j, j);
    for (std::size_t i = j; i-- > 0;) {
      double s = 0.0;
      for (std::size_t k = i + 1; k <= j; ++k)
        s += r(i, k) * u(k, j);
      u(i, j) = -s / r(i, i);
    }
  }
  return u;
}

DenseMatrix damped_inverse_cholesky(const DenseMatrix &hessian, double damp_frac,
                                    double *lambda_out) {
  require(damp_frac > 0.0 && std::isfinite(damp_frac), ErrorCode::kInvalidArgument,
          "damping fraction must be positive");
  require(hessian.rows() == hessian.cols(), ErrorCode::kShapeMismatch,
          "Hessian must be square");
  require(all_finite(hessian.data()), ErrorCode::kNonFinite, "Hessian");
  double mean_diag = 0.0;
  for (std::size_t i = 0; i < hessian.rows(); ++i)
    mean_diag += hessian(i, i);
  if (hessian.rows() > 0)
    mean_diag /= static_cast<double>(hessian.rows());
  const double lambda = mean_diag > 0.0 ? damp_frac * mean_diag : damp_frac;
  if (lambda_out)
    *lambda_out = lambda;
  return inverse_cholesky(hessian, lambda);
}

void finish_calibration(CalibrationStats &stats, double damp_frac) {
  stats.perm = channel_permutation(stats.act_scale);
  stats.chol_inv = damped_inverse_cholesky(permute_symmetric(stats.hessian, stats.perm),
                                           damp_frac, &stats.damp_lambda);
}

CalibrationStats calibrate(std::span<const DenseMatrix> samples, double damp_frac) {
  CalibrationStats stats = accumulate_hessian(samples);
  finish_calibration(stats, damp_frac);
  return stats;
}

} // namespace bwa
