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

#include <stdexcept>
#include <string>

namespace bwa {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kNonFinite,
  kNotFound,
  kIo,
  kBadMagic,
  kBadVersion,
  kUnexpectedEnd,
  kCorrupt,
  kFactorization,
  kInternal,
};

const char *to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message);

  ErrorCode code() const noexcept { return code_; }
  /// Message without the error-code prefix.
  const std::string &detail() const noexcept { return detail_; }

private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, const std::string &message);

inline void require(bool condition, ErrorCode code, const char *message) {
  if (!condition)
    fail(code, message);
}

} // namespace bwa
