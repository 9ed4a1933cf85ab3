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

#include "bwa/model_io.hpp"

#include "bwa/act_quant.hpp"
#include "bwa/error.hpp"
#include "bwa/tensor_io.hpp"
#include "byte_stream.hpp"

#include <algorithm>
#include <string>

namespace bwa {

namespace {
constexpr char kModelMagic[4] = {'B', 'W', 'A', 'Q'};
constexpr std::size_t kLayerHeaderBytes = 16;
} // namespace

std::size_t layer_size_bytes(std::size_t rows, std::size_t cols, std::size_t group_size,
                             std::size_t outlier_count) {
  const std::size_t g = (cols - outlier_count) / group_size;
  const std::size_t w = words_for_bits(group_size);
  return kLayerHeaderBytes + 4 * cols + 16 * rows * g * w + 16 * rows * g +
         rows * outlier_count + 8 * rows + 16 * g;
}

std::size_t model_size_bytes(std::span<const QuantizedLinear> layers) {
  std::size_t n = kModelHeaderBytes;
  for (const auto &l : layers)
    n += layer_size_bytes(l.rows, l.cols, l.group_size, l.outlier_count);
  return n;
}

double bits_per_weight(const QuantizedLinear &layer) {
  const double elems = static_cast<double>(layer.rows) * static_cast<double>(layer.cols);
  return 8.0 *
         static_cast<double>(
             layer_size_bytes(layer.rows, layer.cols, layer.group_size, layer.outlier_count)) /
         elems;
}

std::vector<uint8_t> serialize_model(std::span<const QuantizedLinear> layers) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    try {
      layers[i].validate();
    } catch (const Error &e) {
      throw Error(e.code(), "layer " + std::to_string(i) + ": " + e.detail());
    }
  }
  std::vector<uint8_t> out;
  out.reserve(model_size_bytes(layers));
  detail::ByteWriter w(out);
  for (char c : kModelMagic)
    w.u8(static_cast<uint8_t>(c));
  w.u32(kModelVersion);
  w.u32(static_cast<uint32_t>(layers.size()));
  for (const QuantizedLinear &l : layers) {
    w.u32(l.rows);
    w.u32(l.cols);
    w.u32(l.group_size);
    w.u32(l.outlier_count);
    for (uint32_t p : l.perm)
      w.u32(p);
    for (uint64_t word : l.signs.words())
      w.u64(word);
    for (uint64_t word : l.mask.words())
      w.u64(word);
    for (const Affine &a : l.affine) {
      w.f32(a.alpha);
      w.f32(a.beta);
    }
    w.bytes(l.outliers.codes.data(), l.outliers.codes.size());
    for (const RtnParams &p : l.outliers.params) {
      w.f32(p.scale);
      w.f32(p.zero);
    }
    for (float c : l.plane_corrections)
      w.f32(c);
  }
  return out;
}

namespace {

QuantizedLinear read_layer(detail::ByteReader &r, std::size_t index) {
  const std::size_t start = r.offset();
  const uint32_t rows = r.u32();
  const uint32_t cols = r.u32();
  const uint32_t group_size = r.u32();
  const uint32_t outliers = r.u32();
  const std::string where = "layer " + std::to_string(index) + ": ";
  if (group_size == 0 || outliers > cols || (cols - outliers) % group_size != 0)
    fail(ErrorCode::kCorrupt, where + "invalid geometry rows=" + std::to_string(rows) +
                                  " cols=" + std::to_string(cols) +
                                  " group_size=" + std::to_string(group_size) +
                                  " outliers=" + std::to_string(outliers));
  // Check the full extent before allocating anything sized by the header.
  r.need(layer_size_bytes(rows, cols, group_size, outliers) - (r.offset() - start));

  QuantizedLinear l = QuantizedLinear::zeros(rows, cols, group_size, outliers);
  for (uint32_t &p : l.perm)
    p = r.u32();
  for (uint64_t &word : l.signs.words())
    word = r.u64();
  for (uint64_t &word : l.mask.words())
    word = r.u64();
  for (Affine &a : l.affine) {
    a.alpha = r.f32();
    a.beta = r.f32();
  }
  auto codes = r.bytes(l.outliers.codes.size());
  std::copy(codes.begin(), codes.end(), l.outliers.codes.begin());
  for (RtnParams &p : l.outliers.params) {
    p.scale = r.f32();
    p.zero = r.f32();
  }
  for (float &c : l.plane_corrections)
    c = r.f32();

  try {
    l.validate();
  } catch (const Error &e) {
    throw Error(e.code(), where + e.detail());
  }
  return l;
}

} // namespace

std::vector<QuantizedLinear> deserialize_model(std::span<const uint8_t> bytes) {
  detail::ByteReader r(bytes);
  auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kModelMagic))
    fail(ErrorCode::kBadMagic, "not a BWAQ model");
  const uint32_t version = r.u32();
  if (version != kModelVersion)
    fail(ErrorCode::kBadVersion, "BWAQ version " + std::to_string(version));
  const uint32_t count = r.u32();
  std::vector<QuantizedLinear> layers;
  for (uint32_t i = 0; i < count; ++i)
    layers.push_back(read_layer(r, i));
  if (r.remaining() != 0)
    fail(ErrorCode::kCorrupt, std::to_string(r.remaining()) + " trailing bytes after layer " +
                                  std::to_string(count));
  return layers;
}

void write_model(std::span<const QuantizedLinear> layers, const std::filesystem::path &path) {
  write_file(path, serialize_model(layers));
}

std::vector<QuantizedLinear> read_model(const std::filesystem::path &path) {
  const auto bytes = read_file(path);
  try {
    return deserialize_model(bytes);
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

} // namespace bwa
