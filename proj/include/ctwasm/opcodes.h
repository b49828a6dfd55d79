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

#ifndef CTWASM_OPCODES_H_
#define CTWASM_OPCODES_H_

#include <cstdint>
#include <span>
#include <string_view>

namespace ctwasm {

// Public instructions keep their WebAssembly MVP opcode byte. The CT-Wasm
// coercions are numbered by their two byte encoding.
enum class Opcode : uint16_t {
  Unreachable = 0x00, Nop = 0x01, Block = 0x02, Loop = 0x03, If = 0x04,
  Else = 0x05, End = 0x0B, Br = 0x0C, BrIf = 0x0D, BrTable = 0x0E,
  Return = 0x0F, Call = 0x10, CallIndirect = 0x11,
  Drop = 0x1A, Select = 0x1B,
  LocalGet = 0x20, LocalSet = 0x21, LocalTee = 0x22, GlobalGet = 0x23,
  GlobalSet = 0x24,
  I32Load = 0x28, I64Load = 0x29, F32Load = 0x2A, F64Load = 0x2B,
  I32Load8S = 0x2C, I32Load8U = 0x2D, I32Load16S = 0x2E, I32Load16U = 0x2F,
  I64Load8S = 0x30, I64Load8U = 0x31, I64Load16S = 0x32, I64Load16U = 0x33,
  I64Load32S = 0x34, I64Load32U = 0x35,
  I32Store = 0x36, I64Store = 0x37, F32Store = 0x38, F64Store = 0x39,
  I32Store8 = 0x3A, I32Store16 = 0x3B, I64Store8 = 0x3C, I64Store16 = 0x3D,
  I64Store32 = 0x3E, MemorySize = 0x3F, MemoryGrow = 0x40,
  I32Const = 0x41, I64Const = 0x42, F32Const = 0x43, F64Const = 0x44,
  I32Eqz = 0x45, I32Eq = 0x46, I32Ne = 0x47, I32LtS = 0x48, I32LtU = 0x49,
  I32GtS = 0x4A, I32GtU = 0x4B, I32LeS = 0x4C, I32LeU = 0x4D, I32GeS = 0x4E,
  I32GeU = 0x4F,
  I64Eqz = 0x50, I64Eq = 0x51, I64Ne = 0x52, I64LtS = 0x53, I64LtU = 0x54,
  I64GtS = 0x55, I64GtU = 0x56, I64LeS = 0x57, I64LeU = 0x58, I64GeS = 0x59,
  I64GeU = 0x5A,
  F32Eq = 0x5B, F32Ne = 0x5C, F32Lt = 0x5D, F32Gt = 0x5E, F32Le = 0x5F,
  F32Ge = 0x60,
  F64Eq = 0x61, F64Ne = 0x62, F64Lt = 0x63, F64Gt = 0x64, F64Le = 0x65,
  F64Ge = 0x66,
  I32Clz = 0x67, I32Ctz = 0x68, I32Popcnt = 0x69, I32Add = 0x6A,
  I32Sub = 0x6B, I32Mul = 0x6C, I32DivS = 0x6D, I32DivU = 0x6E,
  I32RemS = 0x6F, I32RemU = 0x70, I32And = 0x71, I32Or = 0x72, I32Xor = 0x73,
  I32Shl = 0x74, I32ShrS = 0x75, I32ShrU = 0x76, I32Rotl = 0x77,
  I32Rotr = 0x78,
  I64Clz = 0x79, I64Ctz = 0x7A, I64Popcnt = 0x7B, I64Add = 0x7C,
  I64Sub = 0x7D, I64Mul = 0x7E, I64DivS = 0x7F, I64DivU = 0x80,
  I64RemS = 0x81, I64RemU = 0x82, I64And = 0x83, I64Or = 0x84, I64Xor = 0x85,
  I64Shl = 0x86, I64ShrS = 0x87, I64ShrU = 0x88, I64Rotl = 0x89,
  I64Rotr = 0x8A,
  F32Abs = 0x8B, F32Neg = 0x8C, F32Ceil = 0x8D, F32Floor = 0x8E,
  F32Trunc = 0x8F, F32Nearest = 0x90, F32Sqrt = 0x91, F32Add = 0x92,
  F32Sub = 0x93, F32Mul = 0x94, F32Div = 0x95, F32Min = 0x96, F32Max = 0x97,
  F32Copysign = 0x98,
  F64Abs = 0x99, F64Neg = 0x9A, F64Ceil = 0x9B, F64Floor = 0x9C,
  F64Trunc = 0x9D, F64Nearest = 0x9E, F64Sqrt = 0x9F, F64Add = 0xA0,
  F64Sub = 0xA1, F64Mul = 0xA2, F64Div = 0xA3, F64Min = 0xA4, F64Max = 0xA5,
  F64Copysign = 0xA6,
  I32WrapI64 = 0xA7, I32TruncF32S = 0xA8, I32TruncF32U = 0xA9,
  I32TruncF64S = 0xAA, I32TruncF64U = 0xAB, I64ExtendI32S = 0xAC,
  I64ExtendI32U = 0xAD, I64TruncF32S = 0xAE, I64TruncF32U = 0xAF,
  I64TruncF64S = 0xB0, I64TruncF64U = 0xB1, F32ConvertI32S = 0xB2,
  F32ConvertI32U = 0xB3, F32ConvertI64S = 0xB4, F32ConvertI64U = 0xB5,
  F32DemoteF64 = 0xB6, F64ConvertI32S = 0xB7, F64ConvertI32U = 0xB8,
  F64ConvertI64S = 0xB9, F64ConvertI64U = 0xBA, F64PromoteF32 = 0xBB,
  I32ReinterpretF32 = 0xBC, I64ReinterpretF64 = 0xBD,
  F32ReinterpretI32 = 0xBE, F64ReinterpretI64 = 0xBF,
  // CT-Wasm coercions.
  S32ClassifyI32 = 0xFEC0, S64ClassifyI64 = 0xFEC1,
  I32DeclassifyS32 = 0xFEC2, I64DeclassifyS64 = 0xFEC3,
};

// The byte that introduces every secret instruction in the binary format.
inline constexpr uint8_t kSecretPrefix = 0xFE;

enum class OpClass : uint8_t {
  Control, Parametric, Variable, Load, Store, MemorySize, MemoryGrow, Const,
  Unop, Binop, Testop, Relop, Convert, Classify, Declassify,
};

enum class ImmKind : uint8_t {
  None, BlockType, Label, BrTable, Func, CallIndirect, Local, Global, MemArg,
  MemoryIndex, I32, I64, F32, F64,
};

// Numeric type codes used by the opcode table. Mirrors ast.h's NumType
// without the include cycle.
enum class OpType : uint8_t { None, I32, I64, F32, F64 };

struct OpInfo {
  Opcode op;
  std::string_view name;  // public text mnemonic, e.g. "i64.extend_i32_s"
  OpClass cls;
  ImmKind imm;
  OpType type = OpType::None;  // result type (const, load, convert) or operand type
  OpType src = OpType::None;   // source type of a conversion
  uint8_t access = 0;          // bytes touched by a load or store
  bool sign_extend = false;    // signed narrow load
  bool unsafe = false;         // operand dependent timing (div, rem)
  bool secret_capable = false; // has a secret variant

  uint8_t natural_align() const;  // log2(access)
};

const OpInfo& op_info(Opcode op);
// Lookup by binary opcode byte of a public instruction; nullptr if unknown.
const OpInfo* op_info_by_byte(uint8_t byte);
// Lookup by the payload byte that follows kSecretPrefix; nullptr if unknown.
const OpInfo* secret_op_info_by_byte(uint8_t byte);
// Lookup by public mnemonic; nullptr if unknown.
const OpInfo* op_info_by_name(std::string_view name);
std::span<const OpInfo> all_opcodes();

}  // namespace ctwasm

#endif  // CTWASM_OPCODES_H_
