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

#include "bwa/error.hpp"

#include <cmath>
#include <string>

namespace bwa {

uint8_t GroupBitplanes::code(std::size_t i) const {
  uint8_t c = 0;
  for (std::size_t a = 0; a < kActPlanes; ++a)
    c |= static_cast<uint8_t>(planes[a].test(i)) << a;
  return c;
}

double GroupBitplanes::value(std::size_t i) const {
  double v = 0.0;
  for (std::size_t a = 0; a < kActPlanes; ++a)
    if (planes[a].test(i))
      v += scales[a];
  return v + shift;
}

GroupBitplanes decompose_bitplanes(std::span<const uint8_t> codes, RtnParams params) {
  GroupBitplanes g;
  for (auto &p : g.planes)
    p = BitBlock(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] > 15)
      fail(ErrorCode::kInvalidArgument,
           "activation code " + std::to_string(codes[i]) + " exceeds 4 bits");
    for (std::size_t a = 0; a < kActPlanes; ++a)
      if ((codes[i] >> a) & 1u)
        g.planes[a].set(i, true);
  }
  g.base_scale = params.scale;
  for (std::size_t a = 0; a < kActPlanes; ++a)
    g.scales[a] = std::ldexp(g.base_scale, static_cast<int>(a));
  g.shift = -g.base_scale * static_cast<double>(params.zero);
  return g;
}

BalanceResult balance_scales(std::span<const double> x_fp, const GroupBitplanes &planes) {
  const std::size_t n = planes.size();
  require(x_fp.size() == n, ErrorCode::kShapeMismatch,
          "balance_scales: original values and planes differ in length");
  require(all_finite(x_fp), ErrorCode::kNonFinite, "balance_scales input");

  BalanceResult out{planes, false};
  std::array<double, kActPlanes> sum{};
  std::size_t included = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const uint8_t c = planes.code(i);
    if (c == 0)
      continue;
    ++included;
    const double err = x_fp[i] - planes.value(i);
    const double core = planes.base_scale * static_cast<double>(c);
    for (std::size_t a = 0; a < kActPlanes; ++a)
      if ((c >> a) & 1u)
        sum[a] += planes.scales[a] / core * err;
  }
  if (included == 0 || planes.base_scale == 0.0)
    return out;
  for (std::size_t a = 0; a < kActPlanes; ++a)
    out.planes.scales[a] += sum[a] / static_cast<double>(included);
  out.applied = true;
  return out;
}

DenseMatrix ActBitplanes::dequantize() const {
  DenseMatrix out(tokens, cols);
  const std::size_t n_groups = groups();
  for (std::size_t t = 0; t < tokens; ++t) {
    for (std::size_t g = 0; g < n_groups; ++g) {
      for (std::size_t i = 0; i < group_size; ++i) {
        double v = 0.0;
        for (std::size_t a = 0; a < kActPlanes; ++a)
          if (planes[a].test(t, g, i))
            v += plane_scale(t, g, a);
        out(t, g * group_size + i) = v + group_shift(t, g);
      }
    }
    const std::size_t base = n_groups * group_size;
    for (std::size_t k = 0; k < outlier_count; ++k)
      out(t, base + k) =
          rtn_dequantize(outlier_codes[t * outlier_count + k], outlier_params[t]);
  }
  return out;
}

namespace {

void check_layout(const DenseMatrix &x, const ActLayout &layout, int bits) {
  require(bits == 4, ErrorCode::kInvalidArgument,
          "bitplane activations require a 4-bit activation width");
  require(layout.perm.size() == x.cols(), ErrorCode::kShapeMismatch,
          "activation width does not match the layer permutation");
  require(layout.group_size > 0 && layout.outlier_count <= x.cols() &&
              (x.cols() - layout.outlier_count) % layout.group_size == 0,
          ErrorCode::kInvalidArgument, "activation grouping does not tile the channels");
  require(all_finite(x.data()), ErrorCode::kNonFinite, "activation");
}

} // namespace

ActBitplanes quantize_activations(const DenseMatrix &x, const ActLayout &layout,
                                  std::span<const float> corrections, int bits, double clip) {
  check_layout(x, layout, bits);

  ActBitplanes act;
  act.tokens = x.rows();
  act.cols = x.cols();
  act.group_size = layout.group_size;
  act.outlier_count = layout.outlier_count;
  act.perm = layout.perm;
  const std::size_t n_groups = act.groups();
  require(corrections.empty() || corrections.size() == n_groups * kActPlanes,
          ErrorCode::kShapeMismatch, "plane-scale corrections do not match the group count");
  for (double c : corrections)
    require(std::isfinite(c), ErrorCode::kNonFinite, "plane-scale correction");

  for (auto &p : act.planes)
    p = PackedBits(act.tokens, n_groups, act.group_size);
  act.plane_scales.assign(act.tokens * n_groups * kActPlanes, 0.0);
  act.shift.assign(act.tokens * n_groups, 0.0);
  act.outlier_codes.assign(act.tokens * act.outlier_count, 0);
  act.outlier_params.assign(act.tokens, RtnParams{});

  std::vector<double> xp(act.cols);
  for (std::size_t t = 0; t < act.tokens; ++t) {
    for (std::size_t p = 0; p < act.cols; ++p)
      xp[p] = x(t, layout.perm[p]);

    for (std::size_t g = 0; g < n_groups; ++g) {
      std::span<const double> slice(xp.data() + g * act.group_size, act.group_size);
      const RtnResult q = rtn_quantize(slice, bits, clip);
      for (std::size_t i = 0; i < act.group_size; ++i)
        for (std::size_t a = 0; a < kActPlanes; ++a)
          if ((q.codes[i] >> a) & 1u)
            act.planes[a].set(t, g, i, true);
      const double mu = q.params.scale;
      for (std::size_t a = 0; a < kActPlanes; ++a) {
        double s = std::ldexp(mu, static_cast<int>(a));
        if (!corrections.empty())
          s *= static_cast<double>(corrections[g * kActPlanes + a]);
        act.plane_scales[(t * n_groups + g) * kActPlanes + a] = s;
      }
      act.shift[t * n_groups + g] = -mu * static_cast<double>(q.params.zero);
    }

    if (act.outlier_count > 0) {
      std::span<const double> tail(xp.data() + n_groups * act.group_size, act.outlier_count);
      RtnResult q = rtn_quantize(tail, 8, clip);
      std::copy(q.codes.begin(), q.codes.end(),
                act.outlier_codes.begin() + static_cast<std::ptrdiff_t>(t * act.outlier_count));
      act.outlier_params[t] = q.params;
    }
  }
  return act;
}

std::vector<float> plane_scale_corrections(const DenseMatrix &calib, const ActLayout &layout,
                                           int bits, double clip) {
  check_layout(calib, layout, bits);
  const std::size_t n_groups = (calib.cols() - layout.outlier_count) / layout.group_size;
  std::vector<double> ratio_sum(n_groups * kActPlanes, 0.0);
  std::vector<std::size_t> ratio_count(n_groups * kActPlanes, 0);

  std::vector<double> xp(calib.cols());
  for (std::size_t t = 0; t < calib.rows(); ++t) {
    for (std::size_t p = 0; p < calib.cols(); ++p)
      xp[p] = calib(t, layout.perm[p]);
    for (std::size_t g = 0; g < n_groups; ++g) {
      std::span<const double> slice(xp.data() + g * layout.group_size, layout.group_size);
      const RtnResult q = rtn_quantize(slice, bits, clip);
      const GroupBitplanes planes = decompose_bitplanes(q.codes, q.params);
      const BalanceResult balanced = balance_scales(slice, planes);
      if (!balanced.applied)
        continue;
      for (std::size_t a = 0; a < kActPlanes; ++a) {
        ratio_sum[g * kActPlanes + a] += balanced.planes.scales[a] / planes.scales[a];
        ++ratio_count[g * kActPlanes + a];
      }
    }
  }

  std::vector<float> factors(n_groups * kActPlanes, 1.0f);
  for (std::size_t k = 0; k < factors.size(); ++k)
    if (ratio_count[k] > 0)
      factors[k] = static_cast<float>(ratio_sum[k] / static_cast<double>(ratio_count[k]));
  return factors;
}

} // namespace bwa
