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

#include "bwa/weight_quant.hpp"

#include "bwa/act_quant.hpp"
#include "bwa/error.hpp"
#include "bwa/rtn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

namespace bwa {

void QuantConfig::validate(std::size_t in_channels) const {
  require(group_size >= 1, ErrorCode::kInvalidArgument, "group size must be positive");
  require(outliers <= in_channels, ErrorCode::kInvalidArgument,
          "outlier count exceeds the number of input channels");
  if ((in_channels - outliers) % group_size != 0)
    fail(ErrorCode::kInvalidArgument,
         "group size " + std::to_string(group_size) + " does not divide " +
             std::to_string(in_channels - outliers) + " non-outlier channels");
  require(method == WeightMethod::kRtn2 || group_size >= 4, ErrorCode::kInvalidArgument,
          "EM clustering needs groups of at least 4 channels");
  require(em_iters >= 1, ErrorCode::kInvalidArgument, "EM needs at least one iteration");
  require(damp > 0.0 && std::isfinite(damp), ErrorCode::kInvalidArgument,
          "damping fraction must be positive");
  require(act_bits == 4, ErrorCode::kInvalidArgument, "activation width must be 4 bits");
  require(clip_ratio > 0.0 && clip_ratio <= 1.0, ErrorCode::kInvalidArgument,
          "clipping ratio must be in (0, 1]");
}

namespace {

void check_group(std::span<const double> w, std::span<const double> hw) {
  require(w.size() == hw.size(), ErrorCode::kShapeMismatch,
          "weights and Hessian weights differ in length");
  require(all_finite(w) && all_finite(hw), ErrorCode::kNonFinite, "weight group");
  for (double h : hw)
    require(h > 0.0, ErrorCode::kInvalidArgument, "Hessian weights must be positive");
}

// Smallest value whose cumulative weight reaches fraction p of the total.
std::vector<double> weighted_quantiles(std::span<const double> w, std::span<const double> hw,
                                       std::span<const double> fractions) {
  std::vector<std::size_t> order(w.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return w[a] < w[b]; });
  const double total = std::accumulate(hw.begin(), hw.end(), 0.0);

  std::vector<double> out;
  out.reserve(fractions.size());
  for (double p : fractions) {
    const double target = p * total;
    double cum = 0.0;
    double value = w[order.back()];
    for (std::size_t k : order) {
      cum += hw[k];
      if (cum >= target) {
        value = w[k];
        break;
      }
    }
    out.push_back(value);
  }
  return out;
}

GroupCenters init_single_subgroup(std::span<const double> w, std::span<const double> hw) {
  const double fr[] = {0.25, 0.75};
  const auto q = weighted_quantiles(w, hw, fr);
  GroupCenters c;
  c.at(0, 0) = c.at(1, 0) = q[0];
  c.at(0, 1) = c.at(1, 1) = q[1];
  return c;
}

} // namespace

GroupCenters init_centers(std::span<const double> w, std::span<const double> hw) {
  check_group(w, hw);
  require(w.size() >= 4, ErrorCode::kInvalidArgument, "init_centers needs at least 4 weights");
  const double fr[] = {0.125, 0.375, 0.625, 0.875};
  const auto q = weighted_quantiles(w, hw, fr);
  GroupCenters c;
  c.at(0, 0) = q[1];
  c.at(0, 1) = q[2];
  c.at(1, 0) = q[0];
  c.at(1, 1) = q[3];
  return c;
}

std::vector<ClusterCode> e_step(std::span<const double> w, std::span<const double> hw,
                                const GroupCenters &centers, unsigned subgroups) {
  check_group(w, hw);
  require(subgroups == 1 || subgroups == 2, ErrorCode::kInvalidArgument,
          "subgroup count must be 1 or 2");
  require(all_finite(centers.c), ErrorCode::kNonFinite, "cluster centers");
  const unsigned n_codes = 2 * subgroups;
  std::vector<ClusterCode> codes(w.size(), 0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    double best = (w[i] - centers.c[0]) * (w[i] - centers.c[0]);
    for (unsigned k = 1; k < n_codes; ++k) {
      const double d = (w[i] - centers.c[k]) * (w[i] - centers.c[k]);
      if (d < best) {
        best = d;
        codes[i] = static_cast<ClusterCode>(k);
      }
    }
  }
  return codes;
}

GroupCenters m_step(std::span<const double> w, std::span<const double> hw,
                    std::span<const ClusterCode> codes, const GroupCenters &previous) {
  check_group(w, hw);
  require(codes.size() == w.size(), ErrorCode::kShapeMismatch,
          "assignment count differs from group size");
  require(!codes.empty(), ErrorCode::kInvalidArgument, "m_step on an empty assignment");
  std::array<double, 4> num{};
  std::array<double, 4> den{};
  for (std::size_t i = 0; i < w.size(); ++i) {
    require(codes[i] < 4, ErrorCode::kInvalidArgument, "cluster code out of range");
    num[codes[i]] += hw[i] * w[i];
    den[codes[i]] += hw[i];
  }
  GroupCenters out = previous;
  for (std::size_t k = 0; k < 4; ++k)
    if (den[k] > 0.0)
      out.c[k] = num[k] / den[k];
  return out;
}

void canonicalize(GroupCenters &centers, std::span<ClusterCode> codes) {
  for (unsigned s = 0; s < 2; ++s) {
    if (centers.at(s, 1) >= centers.at(s, 0))
      continue;
    std::swap(centers.at(s, 0), centers.at(s, 1));
    for (auto &code : codes)
      if (subgroup_of(code) == s)
        code ^= 1u;
  }
}

double em_loss(std::span<const double> w, std::span<const double> hw,
               std::span<const ClusterCode> codes, const GroupCenters &centers) {
  double loss = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = w[i] - centers.c[codes[i]];
    loss += hw[i] * d * d;
  }
  return loss;
}

EmResult em_binarize(std::span<const double> w, std::span<const double> hw, std::size_t iters,
                     unsigned subgroups) {
  require(iters >= 1, ErrorCode::kInvalidArgument, "EM needs at least one iteration");
  require(subgroups == 1 || subgroups == 2, ErrorCode::kInvalidArgument,
          "subgroup count must be 1 or 2");
  check_group(w, hw);

  EmResult r;
  if (subgroups == 2) {
    r.centers = init_centers(w, hw);
  } else {
    require(w.size() >= 2, ErrorCode::kInvalidArgument, "EM needs at least 2 weights");
    r.centers = init_single_subgroup(w, hw);
  }
  r.loss_history.reserve(2 * iters);
  for (std::size_t it = 0; it < iters; ++it) {
    r.codes = e_step(w, hw, r.centers, subgroups);
    r.loss_history.push_back(em_loss(w, hw, r.codes, r.centers));
    r.centers = m_step(w, hw, r.codes, r.centers);
    canonicalize(r.centers, r.codes);
    r.loss_history.push_back(em_loss(w, hw, r.codes, r.centers));
  }
  if (subgroups == 1) {
    r.centers.at(1, 0) = r.centers.at(0, 0);
    r.centers.at(1, 1) = r.centers.at(0, 1);
  }
  r.loss = r.loss_history.back();
  return r;
}

std::array<Affine, 2> recover_affine(const GroupCenters &centers) {
  std::array<Affine, 2> out;
  for (unsigned s = 0; s < 2; ++s) {
    const double lo = centers.at(s, 0);
    const double hi = centers.at(s, 1);
    out[s].alpha = static_cast<float>((hi - lo) / 2.0);
    out[s].beta = static_cast<float>((hi + lo) / 2.0);
  }
  return out;
}

void gptq_compensate(DenseMatrix &w, const DenseMatrix &err, const DenseMatrix &chol_inv,
                     std::size_t block_begin, std::size_t remaining_end) {
  const std::size_t block_end = block_begin + err.cols();
  require(err.rows() == w.rows(), ErrorCode::kShapeMismatch,
          "error block rows differ from weight rows");
  require(block_end <= remaining_end && remaining_end <= w.cols(), ErrorCode::kShapeMismatch,
          "compensation range outside the weight matrix");
  require(chol_inv.rows() >= remaining_end && chol_inv.cols() >= remaining_end,
          ErrorCode::kShapeMismatch, "Cholesky factor smaller than the compensation range");
  for (std::size_t r = 0; r < w.rows(); ++r) {
    auto wr = w.row(r);
    for (std::size_t k = 0; k < err.cols(); ++k) {
      const double e = err(r, k);
      if (e == 0.0)
        continue;
      auto hr = chol_inv.row(block_begin + k);
      for (std::size_t c = block_end; c < remaining_end; ++c)
        wr[c] -= e * hr[c];
    }
  }
}

Int8Block quant_outliers_int8(const DenseMatrix &w_out, double clip) {
  require(all_finite(w_out.data()), ErrorCode::kNonFinite, "outlier weights");
  Int8Block b;
  b.rows = w_out.rows();
  b.cols = w_out.cols();
  b.codes.resize(b.rows * b.cols);
  b.params.resize(b.rows);
  for (std::size_t r = 0; r < b.rows; ++r) {
    RtnResult q = rtn_quantize(w_out.row(r), 8, clip);
    std::copy(q.codes.begin(), q.codes.end(),
              b.codes.begin() + static_cast<std::ptrdiff_t>(r * b.cols));
    b.params[r] = q.params;
  }
  return b;
}

double hessian_weighted_error(const DenseMatrix &w, const DenseMatrix &w_hat,
                              const DenseMatrix &hessian, std::size_t ncols) {
  require(w.rows() == w_hat.rows() && w.cols() == w_hat.cols(), ErrorCode::kShapeMismatch,
          "weight and reconstruction differ in shape");
  require(ncols <= w.cols() && hessian.rows() >= ncols && hessian.cols() >= ncols,
          ErrorCode::kShapeMismatch, "Hessian smaller than the evaluated columns");
  double total = 0.0;
  std::vector<double> d(ncols);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t i = 0; i < ncols; ++i)
      d[i] = w(r, i) - w_hat(r, i);
    for (std::size_t i = 0; i < ncols; ++i) {
      if (d[i] == 0.0)
        continue;
      double hd = 0.0;
      auto hr = hessian.row(i);
      for (std::size_t j = 0; j < ncols; ++j)
        hd += hr[j] * d[j];
      total += d[i] * hd;
    }
  }
  return total;
}

namespace {

GroupCenters rtn2_centers(std::span<const double> w, double clip,
                          std::vector<ClusterCode> &codes) {
  const RtnResult q = rtn_quantize(w, 2, clip);
  codes.assign(q.codes.begin(), q.codes.end());
  GroupCenters c;
  for (unsigned k = 0; k < 4; ++k)
    c.c[k] = rtn_dequantize(static_cast<uint8_t>(k), q.params);
  return c;
}

} // namespace

QuantizeResult quantize_linear(const DenseMatrix &w, const CalibrationStats &stats,
                               const QuantConfig &cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  cfg.validate(cols);
  require(all_finite(w.data()), ErrorCode::kNonFinite, "weights");
  require(stats.perm.size() == cols && is_permutation(stats.perm), ErrorCode::kShapeMismatch,
          "calibration permutation does not match the weight input channels");
  require(stats.chol_inv.rows() == cols && stats.chol_inv.cols() == cols,
          ErrorCode::kShapeMismatch, "Cholesky factor does not match the weight input channels");
  require(stats.hessian.rows() == cols && stats.hessian.cols() == cols,
          ErrorCode::kShapeMismatch, "Hessian does not match the weight input channels");

  const std::size_t bsz = cfg.group_size;
  const std::size_t nbin = cols - cfg.outliers;
  const std::size_t n_groups = nbin / bsz;
  const DenseMatrix &u = stats.chol_inv;
  const unsigned subgroups = cfg.fine_grouping ? 2 : 1;

  QuantizeResult result;
  QuantizedLinear &layer = result.layer;
  layer = QuantizedLinear::zeros(static_cast<uint32_t>(rows), static_cast<uint32_t>(cols),
                                 static_cast<uint32_t>(bsz),
                                 static_cast<uint32_t>(cfg.outliers));
  layer.perm = stats.perm;
  result.report.group_loss.assign(n_groups, 0.0);

  const DenseMatrix w_perm = permute_columns(w, stats.perm);
  DenseMatrix work = w_perm;
  DenseMatrix w_hat(rows, cols);
  DenseMatrix err(rows, bsz);
  std::vector<double> hw(bsz), d(bsz), wg(bsz), dq(bsz);
  std::vector<ClusterCode> codes;

  for (std::size_t g = 0; g < n_groups; ++g) {
    const std::size_t c0 = g * bsz;
    for (std::size_t i = 0; i < bsz; ++i) {
      d[i] = u(c0 + i, c0 + i);
      hw[i] = 1.0 / (d[i] * d[i]);
    }
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t i = 0; i < bsz; ++i)
        wg[i] = work(r, c0 + i);

      GroupCenters centers;
      if (cfg.method == WeightMethod::kRtn2) {
        centers = rtn2_centers(wg, cfg.clip_ratio, codes);
      } else {
        EmResult em = em_binarize(wg, hw, cfg.em_iters, subgroups);
        centers = em.centers;
        codes = std::move(em.codes);
      }
      const auto aff = recover_affine(centers);
      layer.affine_at(r, g, 0) = aff[0];
      layer.affine_at(r, g, 1) = aff[1];

      double loss = 0.0;
      for (std::size_t i = 0; i < bsz; ++i) {
        const unsigned s = subgroup_of(codes[i]);
        const unsigned q = sign_of(codes[i]);
        if (q)
          layer.signs.set(r, g, i, true);
        if (s)
          layer.mask.set(r, g, i, true);
        dq[i] = aff[s].dequantize(q != 0);
        w_hat(r, c0 + i) = dq[i];
        const double diff = wg[i] - dq[i];
        loss += hw[i] * diff * diff;
        err(r, i) = diff / d[i];
      }
      result.report.group_loss[g] += loss;
    }
    if (cfg.compensate && c0 + bsz < nbin)
      gptq_compensate(work, err, u, c0, nbin);
  }

  if (cfg.outliers > 0) {
    DenseMatrix tail(rows, cfg.outliers);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = 0; k < cfg.outliers; ++k)
        tail(r, k) = work(r, nbin + k);
    layer.outliers = quant_outliers_int8(tail, cfg.clip_ratio);
  }

  const DenseMatrix h_perm = permute_symmetric(stats.hessian, stats.perm);
  result.report.hessian_error = hessian_weighted_error(w_perm, w_hat, h_perm, nbin);
  for (std::size_t i = 0; i < nbin; ++i) {
    double diag_inv = 0.0;
    for (std::size_t k = 0; k <= i; ++k)
      diag_inv += u(k, i) * u(k, i);
    double col = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double diff = w_perm(r, i) - w_hat(r, i);
      col += diff * diff;
    }
    result.report.diag_weighted_error += col / diag_inv;
  }
  result.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

} // namespace bwa
