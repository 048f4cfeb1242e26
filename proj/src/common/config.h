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

#include <cstdint>

// The core is compiled twice: the default 32-bit build and a 64-bit build used
// by gradient checks. Each build lives in its own inline namespace so both can
// be linked into one binary.
#ifdef ADVSEQ_REAL_F64
#define ADVSEQ_NAMESPACE_BEGIN \
  namespace advseq {           \
  inline namespace r64 {
#else
#define ADVSEQ_NAMESPACE_BEGIN \
  namespace advseq {           \
  inline namespace r32 {
#endif
#define ADVSEQ_NAMESPACE_END \
  }                          \
  }

ADVSEQ_NAMESPACE_BEGIN

#ifdef ADVSEQ_REAL_F64
using Real = double;
inline constexpr const char* kRealDtype = "f64";
#else
using Real = float;
inline constexpr const char* kRealDtype = "f32";
#endif

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr TokenId kNumReserved = 4;

// Structural tokens. UNK is reserved but behaves like an ordinary word.
inline bool is_special(TokenId id) { return id == kPadId || id == kBosId || id == kEosId; }

ADVSEQ_NAMESPACE_END
