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

#include "ctwasm/opcodes.h"

#include <array>
#include <cassert>
#include <string>
#include <unordered_map>

namespace ctwasm {
namespace {

using T = OpType;
using C = OpClass;
using I = ImmKind;
using O = Opcode;

constexpr bool is_int(T t) { return t == T::I32 || t == T::I64; }

constexpr OpInfo ctl(O op, std::string_view name, I imm = I::None) {
  return {op, name, C::Control, imm};
}
constexpr OpInfo load(O op, std::string_view name, T t, uint8_t bytes, bool sx = false) {
  return {op, name, C::Load, I::MemArg, t, T::None, bytes, sx, false, is_int(t)};
}
constexpr OpInfo store(O op, std::string_view name, T t, uint8_t bytes) {
  return {op, name, C::Store, I::MemArg, t, T::None, bytes, false, false, is_int(t)};
}
constexpr OpInfo num(O op, std::string_view name, C cls, T t, bool unsafe = false) {
  return {op, name, cls, I::None, t, T::None, 0, false, unsafe, is_int(t)};
}
constexpr OpInfo cvt(O op, std::string_view name, T to, T from) {
  return {op, name, C::Convert, I::None, to, from, 0, false, false, is_int(to) || is_int(from)};
}

constexpr std::array kOps = {
    ctl(O::Unreachable, "unreachable"),
    ctl(O::Nop, "nop"),
    ctl(O::Block, "block", I::BlockType),
    ctl(O::Loop, "loop", I::BlockType),
    ctl(O::If, "if", I::BlockType),
    ctl(O::Else, "else"),
    ctl(O::End, "end"),
    ctl(O::Br, "br", I::Label),
    ctl(O::BrIf, "br_if", I::Label),
    ctl(O::BrTable, "br_table", I::BrTable),
    ctl(O::Return, "return"),
    ctl(O::Call, "call", I::Func),
    ctl(O::CallIndirect, "call_indirect", I::CallIndirect),
    OpInfo{O::Drop, "drop", C::Parametric, I::None},
    OpInfo{O::Select, "select", C::Parametric, I::None, T::None, T::None, 0, false, false, true},
    OpInfo{O::LocalGet, "local.get", C::Variable, I::Local},
    OpInfo{O::LocalSet, "local.set", C::Variable, I::Local},
    OpInfo{O::LocalTee, "local.tee", C::Variable, I::Local},
    OpInfo{O::GlobalGet, "global.get", C::Variable, I::Global},
    OpInfo{O::GlobalSet, "global.set", C::Variable, I::Global},
    load(O::I32Load, "i32.load", T::I32, 4),
    load(O::I64Load, "i64.load", T::I64, 8),
    load(O::F32Load, "f32.load", T::F32, 4),
    load(O::F64Load, "f64.load", T::F64, 8),
    load(O::I32Load8S, "i32.load8_s", T::I32, 1, true),
    load(O::I32Load8U, "i32.load8_u", T::I32, 1),
    load(O::I32Load16S, "i32.load16_s", T::I32, 2, true),
    load(O::I32Load16U, "i32.load16_u", T::I32, 2),
    load(O::I64Load8S, "i64.load8_s", T::I64, 1, true),
    load(O::I64Load8U, "i64.load8_u", T::I64, 1),
    load(O::I64Load16S, "i64.load16_s", T::I64, 2, true),
    load(O::I64Load16U, "i64.load16_u", T::I64, 2),
    load(O::I64Load32S, "i64.load32_s", T::I64, 4, true),
    load(O::I64Load32U, "i64.load32_u", T::I64, 4),
    store(O::I32Store, "i32.store", T::I32, 4),
    store(O::I64Store, "i64.store", T::I64, 8),
    store(O::F32Store, "f32.store", T::F32, 4),
    store(O::F64Store, "f64.store", T::F64, 8),
    store(O::I32Store8, "i32.store8", T::I32, 1),
    store(O::I32Store16, "i32.store16", T::I32, 2),
    store(O::I64Store8, "i64.store8", T::I64, 1),
    store(O::I64Store16, "i64.store16", T::I64, 2),
    store(O::I64Store32, "i64.store32", T::I64, 4),
    OpInfo{O::MemorySize, "memory.size", C::MemorySize, I::MemoryIndex},
    OpInfo{O::MemoryGrow, "memory.grow", C::MemoryGrow, I::MemoryIndex},
    OpInfo{O::I32Const, "i32.const", C::Const, I::I32, T::I32, T::None, 0, false, false, true},
    OpInfo{O::I64Const, "i64.const", C::Const, I::I64, T::I64, T::None, 0, false, false, true},
    OpInfo{O::F32Const, "f32.const", C::Const, I::F32, T::F32},
    OpInfo{O::F64Const, "f64.const", C::Const, I::F64, T::F64},
    num(O::I32Eqz, "i32.eqz", C::Testop, T::I32),
    num(O::I32Eq, "i32.eq", C::Relop, T::I32),
    num(O::I32Ne, "i32.ne", C::Relop, T::I32),
    num(O::I32LtS, "i32.lt_s", C::Relop, T::I32),
    num(O::I32LtU, "i32.lt_u", C::Relop, T::I32),
    num(O::I32GtS, "i32.gt_s", C::Relop, T::I32),
    num(O::I32GtU, "i32.gt_u", C::Relop, T::I32),
    num(O::I32LeS, "i32.le_s", C::Relop, T::I32),
    num(O::I32LeU, "i32.le_u", C::Relop, T::I32),
    num(O::I32GeS, "i32.ge_s", C::Relop, T::I32),
    num(O::I32GeU, "i32.ge_u", C::Relop, T::I32),
    num(O::I64Eqz, "i64.eqz", C::Testop, T::I64),
    num(O::I64Eq, "i64.eq", C::Relop, T::I64),
    num(O::I64Ne, "i64.ne", C::Relop, T::I64),
    num(O::I64LtS, "i64.lt_s", C::Relop, T::I64),
    num(O::I64LtU, "i64.lt_u", C::Relop, T::I64),
    num(O::I64GtS, "i64.gt_s", C::Relop, T::I64),
    num(O::I64GtU, "i64.gt_u", C::Relop, T::I64),
    num(O::I64LeS, "i64.le_s", C::Relop, T::I64),
    num(O::I64LeU, "i64.le_u", C::Relop, T::I64),
    num(O::I64GeS, "i64.ge_s", C::Relop, T::I64),
    num(O::I64GeU, "i64.ge_u", C::Relop, T::I64),
    num(O::F32Eq, "f32.eq", C::Relop, T::F32),
    num(O::F32Ne, "f32.ne", C::Relop, T::F32),
    num(O::F32Lt, "f32.lt", C::Relop, T::F32),
    num(O::F32Gt, "f32.gt", C::Relop, T::F32),
    num(O::F32Le, "f32.le", C::Relop, T::F32),
    num(O::F32Ge, "f32.ge", C::Relop, T::F32),
    num(O::F64Eq, "f64.eq", C::Relop, T::F64),
    num(O::F64Ne, "f64.ne", C::Relop, T::F64),
    num(O::F64Lt, "f64.lt", C::Relop, T::F64),
    num(O::F64Gt, "f64.gt", C::Relop, T::F64),
    num(O::F64Le, "f64.le", C::Relop, T::F64),
    num(O::F64Ge, "f64.ge", C::Relop, T::F64),
    num(O::I32Clz, "i32.clz", C::Unop, T::I32),
    num(O::I32Ctz, "i32.ctz", C::Unop, T::I32),
    num(O::I32Popcnt, "i32.popcnt", C::Unop, T::I32),
    num(O::I32Add, "i32.add", C::Binop, T::I32),
    num(O::I32Sub, "i32.sub", C::Binop, T::I32),
    num(O::I32Mul, "i32.mul", C::Binop, T::I32),
    num(O::I32DivS, "i32.div_s", C::Binop, T::I32, true),
    num(O::I32DivU, "i32.div_u", C::Binop, T::I32, true),
    num(O::I32RemS, "i32.rem_s", C::Binop, T::I32, true),
    num(O::I32RemU, "i32.rem_u", C::Binop, T::I32, true),
    num(O::I32And, "i32.and", C::Binop, T::I32),
    num(O::I32Or, "i32.or", C::Binop, T::I32),
    num(O::I32Xor, "i32.xor", C::Binop, T::I32),
    num(O::I32Shl, "i32.shl", C::Binop, T::I32),
    num(O::I32ShrS, "i32.shr_s", C::Binop, T::I32),
    num(O::I32ShrU, "i32.shr_u", C::Binop, T::I32),
    num(O::I32Rotl, "i32.rotl", C::Binop, T::I32),
    num(O::I32Rotr, "i32.rotr", C::Binop, T::I32),
    num(O::I64Clz, "i64.clz", C::Unop, T::I64),
    num(O::I64Ctz, "i64.ctz", C::Unop, T::I64),
    num(O::I64Popcnt, "i64.popcnt", C::Unop, T::I64),
    num(O::I64Add, "i64.add", C::Binop, T::I64),
    num(O::I64Sub, "i64.sub", C::Binop, T::I64),
    num(O::I64Mul, "i64.mul", C::Binop, T::I64),
    num(O::I64DivS, "i64.div_s", C::Binop, T::I64, true),
    num(O::I64DivU, "i64.div_u", C::Binop, T::I64, true),
    num(O::I64RemS, "i64.rem_s", C::Binop, T::I64, true),
    num(O::I64RemU, "i64.rem_u", C::Binop, T::I64, true),
    num(O::I64And, "i64.and", C::Binop, T::I64),
    num(O::I64Or, "i64.or", C::Binop, T::I64),
    num(O::I64Xor, "i64.xor", C::Binop, T::I64),
    num(O::I64Shl, "i64.shl", C::Binop, T::I64),
    num(O::I64ShrS, "i64.shr_s", C::Binop, T::I64),
    num(O::I64ShrU, "i64.shr_u", C::Binop, T::I64),
    num(O::I64Rotl, "i64.rotl", C::Binop, T::I64),
    num(O::I64Rotr, "i64.rotr", C::Binop, T::I64),
    num(O::F32Abs, "f32.abs", C::Unop, T::F32),
    num(O::F32Neg, "f32.neg", C::Unop, T::F32),
    num(O::F32Ceil, "f32.ceil", C::Unop, T::F32),
    num(O::F32Floor, "f32.floor", C::Unop, T::F32),
    num(O::F32Trunc, "f32.trunc", C::Unop, T::F32),
    num(O::F32Nearest, "f32.nearest", C::Unop, T::F32),
    num(O::F32Sqrt, "f32.sqrt", C::Unop, T::F32),
    num(O::F32Add, "f32.add", C::Binop, T::F32),
    num(O::F32Sub, "f32.sub", C::Binop, T::F32),
    num(O::F32Mul, "f32.mul", C::Binop, T::F32),
    num(O::F32Div, "f32.div", C::Binop, T::F32, true),
    num(O::F32Min, "f32.min", C::Binop, T::F32),
    num(O::F32Max, "f32.max", C::Binop, T::F32),
    num(O::F32Copysign, "f32.copysign", C::Binop, T::F32),
    num(O::F64Abs, "f64.abs", C::Unop, T::F64),
    num(O::F64Neg, "f64.neg", C::Unop, T::F64),
    num(O::F64Ceil, "f64.ceil", C::Unop, T::F64),
    num(O::F64Floor, "f64.floor", C::Unop, T::F64),
    num(O::F64Trunc, "f64.trunc", C::Unop, T::F64),
    num(O::F64Nearest, "f64.nearest", C::Unop, T::F64),
    num(O::F64Sqrt, "f64.sqrt", C::Unop, T::F64),
    num(O::F64Add, "f64.add", C::Binop, T::F64),
    num(O::F64Sub, "f64.sub", C::Binop, T::F64),
    num(O::F64Mul, "f64.mul", C::Binop, T::F64),
    num(O::F64Div, "f64.div", C::Binop, T::F64, true),
    num(O::F64Min, "f64.min", C::Binop, T::F64),
    num(O::F64Max, "f64.max", C::Binop, T::F64),
    num(O::F64Copysign, "f64.copysign", C::Binop, T::F64),
    cvt(O::I32WrapI64, "i32.wrap_i64", T::I32, T::I64),
    cvt(O::I32TruncF32S, "i32.trunc_f32_s", T::I32, T::F32),
    cvt(O::I32TruncF32U, "i32.trunc_f32_u", T::I32, T::F32),
    cvt(O::I32TruncF64S, "i32.trunc_f64_s", T::I32, T::F64),
    cvt(O::I32TruncF64U, "i32.trunc_f64_u", T::I32, T::F64),
    cvt(O::I64ExtendI32S, "i64.extend_i32_s", T::I64, T::I32),
    cvt(O::I64ExtendI32U, "i64.extend_i32_u", T::I64, T::I32),
    cvt(O::I64TruncF32S, "i64.trunc_f32_s", T::I64, T::F32),
    cvt(O::I64TruncF32U, "i64.trunc_f32_u", T::I64, T::F32),
    cvt(O::I64TruncF64S, "i64.trunc_f64_s", T::I64, T::F64),
    cvt(O::I64TruncF64U, "i64.trunc_f64_u", T::I64, T::F64),
    cvt(O::F32ConvertI32S, "f32.convert_i32_s", T::F32, T::I32),
    cvt(O::F32ConvertI32U, "f32.convert_i32_u", T::F32, T::I32),
    cvt(O::F32ConvertI64S, "f32.convert_i64_s", T::F32, T::I64),
    cvt(O::F32ConvertI64U, "f32.convert_i64_u", T::F32, T::I64),
    cvt(O::F32DemoteF64, "f32.demote_f64", T::F32, T::F64),
    cvt(O::F64ConvertI32S, "f64.convert_i32_s", T::F64, T::I32),
    cvt(O::F64ConvertI32U, "f64.convert_i32_u", T::F64, T::I32),
    cvt(O::F64ConvertI64S, "f64.convert_i64_s", T::F64, T::I64),
    cvt(O::F64ConvertI64U, "f64.convert_i64_u", T::F64, T::I64),
    cvt(O::F64PromoteF32, "f64.promote_f32", T::F64, T::F32),
    cvt(O::I32ReinterpretF32, "i32.reinterpret_f32", T::I32, T::F32),
    cvt(O::I64ReinterpretF64, "i64.reinterpret_f64", T::I64, T::F64),
    cvt(O::F32ReinterpretI32, "f32.reinterpret_i32", T::F32, T::I32),
    cvt(O::F64ReinterpretI64, "f64.reinterpret_i64", T::F64, T::I64),
    OpInfo{O::S32ClassifyI32, "s32.classify/i32", C::Classify, I::None, T::I32, T::I32},
    OpInfo{O::S64ClassifyI64, "s64.classify/i64", C::Classify, I::None, T::I64, T::I64},
    OpInfo{O::I32DeclassifyS32, "i32.declassify/s32", C::Declassify, I::None, T::I32, T::I32},
    OpInfo{O::I64DeclassifyS64, "i64.declassify/s64", C::Declassify, I::None, T::I64, T::I64},
};

struct Index {
  std::array<const OpInfo*, 256> by_byte{};
  std::array<const OpInfo*, 256> secret_by_byte{};
  std::unordered_map<std::string_view, const OpInfo*> by_name;
  std::unordered_map<uint16_t, const OpInfo*> by_op;

  Index() {
    for (const OpInfo& info : kOps) {
      auto code = static_cast<uint16_t>(info.op);
      by_op[code] = &info;
      by_name[info.name] = &info;
      if (code < 0x100) {
        by_byte[code] = &info;
        if (info.secret_capable) secret_by_byte[code] = &info;
      } else {
        assert((code >> 8) == kSecretPrefix);
        secret_by_byte[code & 0xFF] = &info;
      }
    }
  }
};

const Index& index() {
  static const Index idx;
  return idx;
}

}  // namespace

uint8_t OpInfo::natural_align() const {
  switch (access) {
    case 1: return 0;
    case 2: return 1;
    case 4: return 2;
    case 8: return 3;
    default: return 0;
  }
}

const OpInfo& op_info(Opcode op) {
  auto it = index().by_op.find(static_cast<uint16_t>(op));
  assert(it != index().by_op.end());
  return *it->second;
}

const OpInfo* op_info_by_byte(uint8_t byte) { return index().by_byte[byte]; }

const OpInfo* secret_op_info_by_byte(uint8_t byte) {
  return index().secret_by_byte[byte];
}

const OpInfo* op_info_by_name(std::string_view name) {
  auto it = index().by_name.find(name);
  return it == index().by_name.end() ? nullptr : it->second;
}

std::span<const OpInfo> all_opcodes() { return kOps; }

}  // namespace ctwasm
