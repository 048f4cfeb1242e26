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

#include "common/error.h"

ADVSEQ_NAMESPACE_BEGIN

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kVocabulary: return "vocabulary";
    case ErrorCode::kDegenerateInput: return "degenerate_input";
    case ErrorCode::kContract: return "contract";
    case ErrorCode::kLength: return "length";
    case ErrorCode::kData: return "data";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kDiverged: return "diverged";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

ADVSEQ_NAMESPACE_END
