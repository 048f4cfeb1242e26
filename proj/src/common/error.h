// Copyright 2026 The AdvSeq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

#include "common/config.h"

ADVSEQ_NAMESPACE_BEGIN

// Every failure the library reports maps to one of these. The C API and the
// CLI translate them into status codes and exit codes.
enum class ErrorCode {
  kDimension,
  kVocabulary,
  kDegenerateInput,
  kContract,
  kLength,
  kData,
  kFormat,
  kConfig,
  kIo,
  kDiverged,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

ADVSEQ_NAMESPACE_END
