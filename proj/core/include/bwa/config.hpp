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

#include <cstddef>

namespace bwa {

enum class WeightMethod {
  kEm,   // Hessian-weighted EM clustering into four centers
  kRtn2, // plain asymmetric 2-bit RTN, equally spaced levels
};

struct QuantConfig {
  std::size_t group_size = 128;
  std::size_t outliers = 128;
  std::size_t em_iters = 8;
  double damp = 0.01;
  int act_bits = 4;
  double clip_ratio = 1.0;

  WeightMethod method = WeightMethod::kEm;
  bool fine_grouping = true;
  bool compensate = true;
  bool balance = true;

  /// Throws Error(kInvalidArgument) if the config cannot be applied to a
  /// layer with in_channels input channels.
  void validate(std::size_t in_channels) const;
};

} // namespace bwa
