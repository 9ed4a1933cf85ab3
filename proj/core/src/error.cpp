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

#include "bwa/error.hpp"

namespace bwa {

const char *to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::kInvalidArgument:
    return "invalid argument";
  case ErrorCode::kShapeMismatch:
    return "shape mismatch";
  case ErrorCode::kNonFinite:
    return "non-finite value";
  case ErrorCode::kNotFound:
    return "file not found";
  case ErrorCode::kIo:
    return "i/o error";
  case ErrorCode::kBadMagic:
    return "bad magic";
  case ErrorCode::kBadVersion:
    return "bad version";
  case ErrorCode::kUnexpectedEnd:
    return "unexpected end";
  case ErrorCode::kCorrupt:
    return "corrupt data";
  case ErrorCode::kFactorization:
    return "factorization failure";
  case ErrorCode::kInternal:
    return "internal error";
  }
  return "unknown error";
}

Error::Error(ErrorCode code, const std::string &message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code), detail_(message) {}

void fail(ErrorCode code, const std::string &message) {
  throw Error(code, message);
}

} // namespace bwa
