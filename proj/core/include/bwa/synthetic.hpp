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
#include "bwa/quantized_linear.hpp"

#include <cstdint>
#include <random>

namespace bwa {

/// Gaussian matrix with the given standard deviation.
DenseMatrix random_gaussian(std::size_t rows, std::size_t cols, double stddev,
                            std::mt19937_64 &rng);

/// Layer with uniformly random bits, Gaussian affine parameters, a random
/// permutation, random INT8 outliers and unit plane corrections.
QuantizedLinear random_layer(uint32_t rows, uint32_t cols, uint32_t group_size,
                             uint32_t outlier_count, std::mt19937_64 &rng);

} // namespace bwa
