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

#include "bwa/rtn.hpp"

#include "bwa/dense_matrix.hpp"
#include "bwa/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bwa {

RtnResult rtn_quantize(std::span<const double> x, int bits, double clip) {
  require(bits >= 1 && bits <= 8, ErrorCode::kInvalidArgument, "RTN bit width must be 1..8");
  require(clip > 0.0 && clip <= 1.0, ErrorCode::kInvalidArgument,
          "clipping ratio must be in (0, 1]");
  require(all_finite(x), ErrorCode::kNonFinite, "RTN input");

  RtnResult out;
  out.codes.assign(x.size(), 0);
  if (x.empty())
    return out;

  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double levels = static_cast<double>((1 << bits) - 1);

  const double exact_scale = clip * (hi - lo) / levels;
  float scale = static_cast<float>(exact_scale);
  if (static_cast<double>(scale) < exact_scale)
    scale = std::nextafter(scale, std::numeric_limits<float>::infinity());
  if (!(scale > 0.0f) || !std::isfinite(scale)) {
    out.params = {1.0f, static_cast<float>(-lo)};
    return out;
  }

  const double s = scale;
  const double zero = -std::round(lo / s);
  out.params = {scale, static_cast<float>(zero)};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double q = std::round(x[i] / s) + zero;
    out.codes[i] = static_cast<uint8_t>(std::clamp(q, 0.0, levels));
  }
  return out;
}

} // namespace bwa
