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

#include "bwa/quantized_linear.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace bwa {

// BWAQ model file, all integers and floats little-endian, no padding:
//
//   header   char[4] "BWAQ" | u32 version = 1 | u32 layer_count      12 bytes
//   layer    u32 rows | u32 cols | u32 group_size | u32 outlier_count 16 bytes
//            u32 perm[cols]                                            4 C
//            u64 signs[rows][groups][W]                                8 R G W
//            u64 mask[rows][groups][W]                                 8 R G W
//            f32 affine[rows][groups][2][alpha, beta]                  16 R G
//            u8  outlier_codes[rows][outlier_count]                    R K
//            f32 outlier_params[rows][scale, zero]                     8 R
//            f32 plane_corrections[groups][4]                          16 G
//
// with groups G = (cols - outlier_count) / group_size and
// W = ceil(group_size / 64) words per bit block (zero padded).

inline constexpr uint32_t kModelVersion = 1;
inline constexpr std::size_t kModelHeaderBytes = 12;

/// Closed-form size of one serialized layer.
std::size_t layer_size_bytes(std::size_t rows, std::size_t cols, std::size_t group_size,
                             std::size_t outlier_count);
std::size_t model_size_bytes(std::span<const QuantizedLinear> layers);

/// Serialized bits per weight element of one layer.
double bits_per_weight(const QuantizedLinear &layer);

std::vector<uint8_t> serialize_model(std::span<const QuantizedLinear> layers);
std::vector<QuantizedLinear> deserialize_model(std::span<const uint8_t> bytes);

void write_model(std::span<const QuantizedLinear> layers, const std::filesystem::path &path);
std::vector<QuantizedLinear> read_model(const std::filesystem::path &path);

} // namespace bwa
