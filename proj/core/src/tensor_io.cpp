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

#include "bwa/tensor_io.hpp"

#include "byte_stream.hpp"

#include <fstream>
#include <iterator>

namespace bwa {

namespace {
constexpr char kTensorMagic[4] = {'B', 'W', 'A', 'T'};
constexpr uint32_t kTensorVersion = 1;
} // namespace

std::vector<uint8_t> encode_tensor(const DenseMatrix &m, TensorDtype dtype) {
  std::vector<uint8_t> out;
  const std::size_t width = dtype == TensorDtype::kF32 ? 4 : 8;
  out.reserve(4 + 4 + 4 + 16 + 1 + m.size() * width);
  detail::ByteWriter w(out);
  for (char c : kTensorMagic)
    w.u8(static_cast<uint8_t>(c));
  w.u32(kTensorVersion);
  w.u32(2);
  w.u64(m.rows());
  w.u64(m.cols());
  w.u8(static_cast<uint8_t>(dtype));
  for (double v : m.data()) {
    if (dtype == TensorDtype::kF32)
      w.f32(static_cast<float>(v));
    else
      w.f64(v);
  }
  return out;
}

DenseMatrix decode_tensor(std::span<const uint8_t> bytes) {
  detail::ByteReader r(bytes);
  auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kTensorMagic))
    fail(ErrorCode::kBadMagic, "not a BWAT tensor");
  const uint32_t version = r.u32();
  if (version != kTensorVersion)
    fail(ErrorCode::kBadVersion, "BWAT version " + std::to_string(version));
  const uint32_t rank = r.u32();
  if (rank != 1 && rank != 2)
    fail(ErrorCode::kCorrupt, "unsupported tensor rank " + std::to_string(rank));
  uint64_t dims[2] = {1, 1};
  for (uint32_t k = 0; k < rank; ++k)
    dims[2 - rank + k] = r.u64();
  const uint8_t dtype = r.u8();
  if (dtype > 1)
    fail(ErrorCode::kCorrupt, "unknown tensor dtype " + std::to_string(dtype));
  const std::size_t width = dtype == 0 ? 4 : 8;
  if (dims[1] != 0 && dims[0] > r.remaining() / width / dims[1])
    r.need(r.remaining() + 1);
  const std::size_t count = dims[0] * dims[1];
  r.need(count * width);
  std::vector<double> data(count);
  for (double &v : data)
    v = dtype == 0 ? static_cast<double>(r.f32()) : r.f64();
  if (r.remaining() != 0)
    fail(ErrorCode::kCorrupt, std::to_string(r.remaining()) + " trailing bytes after tensor");
  return DenseMatrix(dims[0], dims[1], std::move(data));
}

std::vector<uint8_t> read_file(const std::filesystem::path &path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    fail(ErrorCode::kNotFound, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path &path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
    fail(ErrorCode::kIo, "write failed for " + path.string());
}

DenseMatrix read_tensor(const std::filesystem::path &path) {
  const auto bytes = read_file(path);
  try {
    return decode_tensor(bytes);
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

void write_tensor(const std::filesystem::path &path, const DenseMatrix &m, TensorDtype dtype) {
  write_file(path, encode_tensor(m, dtype));
}

} // namespace bwa
