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

#include <ostream>
#include <string>
#include <vector>

namespace bwa::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitInternal = 4,
};

/// Maps a library error to the process exit status.
int exit_code_for(ErrorCode code);

/// Runs one command line (argv[0] is the program name) writing results to
/// out and diagnostics to err. Never throws.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// Sidecar written next to a quantized model.
std::string report_path(const std::string &model_path);

} // namespace bwa::cli
