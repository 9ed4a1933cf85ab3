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

#include "bwa/bit_block.hpp"

namespace bwa {

BitBlock BitBlock::from_bits(std::span<const uint8_t> bits) {
  BitBlock b(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i)
    b.set(i, bits[i] != 0);
  return b;
}

void BitBlock::set(std::size_t i, bool bit) {
  const uint64_t m = uint64_t{1} << (i % kWordBits);
  if (bit)
    words_[i / kWordBits] |= m;
  else
    words_[i / kWordBits] &= ~m;
}

PackedBits::PackedBits(std::size_t rows, std::size_t groups, std::size_t group_bits)
    : rows_(rows), groups_(groups), group_bits_(group_bits),
      words_per_group_(words_for_bits(group_bits)),
      words_(rows * groups * words_for_bits(group_bits), 0) {}

void PackedBits::set(std::size_t row, std::size_t group, std::size_t i, bool bit) {
  uint64_t &w = words_[offset(row, group) + i / kWordBits];
  const uint64_t m = uint64_t{1} << (i % kWordBits);
  w = bit ? (w | m) : (w & ~m);
}

bool PackedBits::padding_clear() const {
  const std::size_t tail = group_bits_ % kWordBits;
  if (tail == 0 || words_per_group_ == 0)
    return true;
  const uint64_t pad_mask = ~((uint64_t{1} << tail) - 1);
  for (std::size_t blk = 0; blk < rows_ * groups_; ++blk)
    if (words_[blk * words_per_group_ + words_per_group_ - 1] & pad_mask)
      return false;
  return true;
}

} // namespace bwa
