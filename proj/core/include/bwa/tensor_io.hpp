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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace bwa {

// BWAT tensor file, little-endian:
//   char[4] "BWAT" | u32 version = 1 | u32 rank | u64 dims[rank] | u8 dtype
//   followed by the row-major payload (dtype 0 = f32, 1 = f64).
// Rank 1 tensors load as a single row; rank 2 as rows x cols.

enum class TensorDtype : uint8_t { kF32 = 0, kF64 = 1 };

std::vector<uint8_t> encode_tensor(const DenseMatrix &m, TensorDtype dtype = TensorDtype::kF32);
DenseMatrix decode_tensor(std::span<const uint8_t> bytes);

DenseMatrix read_tensor(const std::filesystem::path &path);
void write_tensor(const std::filesystem::path &path, const DenseMatrix &m,
                  TensorDtype dtype = TensorDtype::kF32);

std::vector<uint8_t> read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::span<const uint8_t> bytes);

} // namespace bwa
