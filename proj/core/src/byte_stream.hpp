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

#include "bwa/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

namespace bwa::detail {

class ByteWriter {
public:
  explicit ByteWriter(std::vector<uint8_t> &out) : out_(out) {}

  void bytes(const void *p, std::size_t n) {
    const auto *b = static_cast<const uint8_t *>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(uint8_t v) { out_.push_back(v); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i)
      out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i)
      out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }

private:
  std::vector<uint8_t> &out_;
};

class ByteReader {
public:
  explicit ByteReader(std::span<const uint8_t> in) : in_(in) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

  void need(std::size_t n) const {
    if (remaining() < n)
      fail(ErrorCode::kUnexpectedEnd, "needed " + std::to_string(n) + " bytes at byte offset " +
                                          std::to_string(pos_) + ", " +
                                          std::to_string(remaining()) + " available");
  }
  std::span<const uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  uint8_t u8() { return bytes(1)[0]; }
  uint32_t u32() {
    auto b = bytes(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= uint32_t{b[i]} << (8 * i);
    return v;
  }
  uint64_t u64() {
    auto b = bytes(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= uint64_t{b[i]} << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

private:
  std::span<const uint8_t> in_;
  std::size_t pos_ = 0;
};

} // namespace bwa::detail
