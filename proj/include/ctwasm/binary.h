// Copyright 2026 The ctwasm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS-IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Binary format. Modules without CT-Wasm constructs encode exactly as
// WebAssembly MVP. The extensions, normative for this toolchain:
//
//   value types       s32 = 0x6F, s64 = 0x6E
//   secret op         0xFE followed by the public opcode byte (s32.add = FE 6A)
//   select secret     FE 1B
//   classify          FE C0 (to s32), FE C1 (to s64)
//   declassify        FE C2 (to i32), FE C3 (to i64)
//   function type     0x60 untrusted, 0x5F trusted
//   memory limits     flag bit 0x04 marks a secret memory
//   call_indirect     the byte after the type index is 0x00 (untrusted) or
//                     0x01 (trusted) and must agree with the type's trust

#ifndef CTWASM_BINARY_H_
#define CTWASM_BINARY_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctwasm/ast.h"

namespace ctwasm {

namespace encoding {
inline constexpr uint8_t kI32 = 0x7F;
inline constexpr uint8_t kI64 = 0x7E;
inline constexpr uint8_t kF32 = 0x7D;
inline constexpr uint8_t kF64 = 0x7C;
inline constexpr uint8_t kS32 = 0x6F;
inline constexpr uint8_t kS64 = 0x6E;
inline constexpr uint8_t kEmptyBlock = 0x40;
inline constexpr uint8_t kFuncRef = 0x70;
inline constexpr uint8_t kFuncUntrusted = 0x60;
inline constexpr uint8_t kFuncTrusted = 0x5F;
inline constexpr uint8_t kLimitsHasMax = 0x01;
inline constexpr uint8_t kLimitsSecret = 0x04;
inline constexpr uint8_t kCallIndirectTrusted = 0x01;
}  // namespace encoding

enum class DecodeErrorCode {
  BadMagic,
  BadVersion,
  UnexpectedEnd,
  MalformedLeb,
  SectionOrder,
  UnknownSection,
  SectionSizeMismatch,
  UnknownOpcode,
  UnknownSecretOpcode,
  UnknownValType,
  UnknownTypeForm,
  MalformedLimits,
  UnknownExternKind,
  MalformedReserved,
  FunctionCodeMismatch,
  MalformedUtf8,
  TooManyLocals,
  ResultArity,
};

std::string_view to_string(DecodeErrorCode code);

class DecodeError : public std::runtime_error {
 public:
  DecodeError(DecodeErrorCode code, size_t offset, const std::string& what);
  DecodeErrorCode code() const { return code_; }
  size_t offset() const { return offset_; }

 private:
  DecodeErrorCode code_;
  size_t offset_;
};

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<uint8_t> encode_module(const Module& m);
Module decode_module(std::span<const uint8_t> bytes);

// LEB128 helpers, exposed for tests and tools.
void write_uleb(std::vector<uint8_t>& out, uint64_t value);
void write_sleb(std::vector<uint8_t>& out, int64_t value);

}  // namespace ctwasm

#endif  // CTWASM_BINARY_H_
