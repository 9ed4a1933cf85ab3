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

#include <cstdint>
#include <span>
#include <vector>

namespace bwa {

/// Asymmetric round-to-nearest parameters. Dequantization is
/// scale * (code - zero).
struct RtnParams {
  float scale = 1.0f;
  float zero = 0.0f;

  bool operator==(const RtnParams &) const = default;
};

struct RtnResult {
  std::vector<uint8_t> codes;
  RtnParams params;
};

/// scale = clip * (max - min) / (2^bits - 1), zero = -round(min / scale),
/// code = clamp(round(x / scale) + zero, 0, 2^bits - 1).
///
/// The scale is stored as a float rounded toward +inf; codes stay within
/// the lattice. A constant input (max == min) yields
/// scale 1, zero -min and all-zero codes, so it dequantizes back to min.
RtnResult rtn_quantize(std::span<const double> x, int bits, double clip);

inline double rtn_dequantize(uint8_t code, RtnParams p) {
  return static_cast<double>(p.scale) *
         (static_cast<double>(code) - static_cast<double>(p.zero));
}

} // namespace bwa
