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

#include "bwa/config.hpp"
#include "bwa/dense_matrix.hpp"
#include "bwa/quantized_linear.hpp"
#include "bwa/weight_quant.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace bwa {

/// Elementwise nonlinearity applied between stacked layers.
enum class Activation { kNone, kRelu };

Activation parse_activation(std::string_view name);
const char *to_string(Activation act);

DenseMatrix apply_activation(DenseMatrix x, Activation act);

/// Quantizes a stack of linear layers. Layer 0 is calibrated on `calib`;
/// layer l > 0 on the float outputs of layers < l. When cfg.balance is set
/// the activation plane-scale corrections are derived from the same data.
std::vector<QuantizeResult> quantize_stack(std::span<const DenseMatrix> weights,
                                           std::span<const DenseMatrix> calib,
                                           const QuantConfig &cfg, Activation act);

/// Bit-kernel inference through a quantized stack. The activation function
/// is applied between layers, not after the last one.
DenseMatrix run_quantized(std::span<const QuantizedLinear> layers, const DenseMatrix &x,
                          Activation act, std::vector<DenseMatrix> *layer_outputs = nullptr);

/// Float inference through a stack of dense weights (rows = outputs).
DenseMatrix run_float(std::span<const DenseMatrix> weights, const DenseMatrix &x,
                      Activation act, std::vector<DenseMatrix> *layer_inputs = nullptr,
                      std::vector<DenseMatrix> *layer_outputs = nullptr);

/// sum (out - ref)^2 / sum ref^2; falls back to the plain squared error when
/// ref is all zero. Exactly 0 for identical inputs.
double relative_mse(const DenseMatrix &out, const DenseMatrix &ref);

} // namespace bwa
