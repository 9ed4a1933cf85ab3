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
#include <cstdint>
#include <span>
#include <vector>

namespace bwa {

inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for_bits(std::size_t bits) {
  return (bits + kWordBits - 1) / kWordBits;
}

/// Read-only view over one group of channel bits. Bit i lives in word i / 64
/// at position i % 64 (LSB = lowest channel). Bits past valid_bits are zero.
struct BitBlockView {
  std::span<const uint64_t> words;
  std::size_t valid_bits = 0;

  bool test(std::size_t i) const { return (words[i / kWordBits] >> (i % kWordBits)) & 1u; }
};

/// Owning block of channel bits.
class BitBlock {
public:
  BitBlock() = default;
  explicit BitBlock(std::size_t valid_bits)
      : words_(words_for_bits(valid_bits), 0), valid_bits_(valid_bits) {}

  static BitBlock from_bits(std::span<const uint8_t> bits);

  std::size_t valid_bits() const noexcept { return valid_bits_; }
  std::span<const uint64_t> words() const noexcept { return words_; }
  std::span<uint64_t> words() noexcept { return words_; }

  bool test(std::size_t i) const { return view().test(i); }
  void set(std::size_t i, bool bit);

  BitBlockView view() const { return {words_, valid_bits_}; }

  bool operator==(const BitBlock &) const = default;

private:
  std::vector<uint64_t> words_;
  std::size_t valid_bits_ = 0;
};

/// rows x groups grid of bit blocks, each group_bits wide and padded to whole
/// words. Used for sign/mask bitplanes (rows = output channels) and activation
/// planes (rows = tokens).
class PackedBits {
public:
  PackedBits() = default;
  PackedBits(std::size_t rows, std::size_t groups, std::size_t group_bits);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t groups() const noexcept { return groups_; }
  std::size_t group_bits() const noexcept { return group_bits_; }
  std::size_t words_per_group() const noexcept { return words_per_group_; }

  BitBlockView block(std::size_t row, std::size_t group) const {
    return {{words_.data() + offset(row, group), words_per_group_}, group_bits_};
  }
  std::span<uint64_t> block_words(std::size_t row, std::size_t group) {
    return {words_.data() + offset(row, group), words_per_group_};
  }

  bool test(std::size_t row, std::size_t group, std::size_t i) const {
    return block(row, group).test(i);
  }
  void set(std::size_t row, std::size_t group, std::size_t i, bool bit);

  std::span<const uint64_t> words() const noexcept { return words_; }
  std::span<uint64_t> words() noexcept { return words_; }

  /// True when every padding bit past group_bits is zero.
  bool padding_clear() const;

  bool operator==(const PackedBits &) const = default;

private:
  std::size_t offset(std::size_t row, std::size_t group) const {
    return (row * groups_ + group) * words_per_group_;
  }

  std::size_t rows_ = 0;
  std::size_t groups_ = 0;
  std::size_t group_bits_ = 0;
  std::size_t words_per_group_ = 0;
  std::vector<uint64_t> words_;
};

} // namespace bwa
