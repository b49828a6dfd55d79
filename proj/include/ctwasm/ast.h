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

// Abstract syntax of CT-Wasm modules: WebAssembly MVP extended with secrecy
// annotated integer types, trust annotated function types and secret memories.

#ifndef CTWASM_AST_H_
#define CTWASM_AST_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctwasm/opcodes.h"

namespace ctwasm {

enum class Secrecy : uint8_t { Public, Secret };
enum class Trust : uint8_t { Untrusted, Trusted };

// Machine representation of a value; secrecy is carried separately.
enum class NumType : uint8_t { I32, I64, F32, F64 };

inline bool is_int(NumType t) { return t == NumType::I32 || t == NumType::I64; }
inline bool is_float(NumType t) { return !is_int(t); }
inline uint32_t byte_width(NumType t) {
  return (t == NumType::I32 || t == NumType::F32) ? 4 : 8;
}

struct ValType {
  NumType num = NumType::I32;
  Secrecy sec = Secrecy::Public;

  constexpr ValType() = default;
  constexpr ValType(NumType n, Secrecy s = Secrecy::Public) : num(n), sec(s) {}

  bool is_secret() const { return sec == Secrecy::Secret; }
  friend bool operator==(const ValType&, const ValType&) = default;
};

// Integer types take the given secrecy; floats stay public.
inline ValType typed(NumType n, Secrecy s) {
  return ValType(n, is_int(n) ? s : Secrecy::Public);
}

inline constexpr ValType kI32{NumType::I32};
inline constexpr ValType kI64{NumType::I64};
inline constexpr ValType kF32{NumType::F32};
inline constexpr ValType kF64{NumType::F64};
inline constexpr ValType kS32{NumType::I32, Secrecy::Secret};
inline constexpr ValType kS64{NumType::I64, Secrecy::Secret};

// Secrecy of a value type. Floats are always public.
Secrecy sec_of(ValType t);

// tr may call a function of trust callee.
bool trust_geq(Trust tr, Trust callee);

// Result type of classify applied to t. Throws std::invalid_argument for a
// float or already-secret input.
ValType classify_result(ValType t);
ValType declassify_result(ValType t);

// A value type is well formed when floats are public.
bool well_formed(ValType t);

std::string to_string(ValType t);
std::string_view to_string(Secrecy s);
std::string_view to_string(Trust t);

struct FuncType {
  Trust trust = Trust::Untrusted;
  std::vector<ValType> params;
  std::vector<ValType> results;  // length <= 1

  friend bool operator==(const FuncType&, const FuncType&) = default;
};

std::string to_string(const FuncType& ft);

// Source location attached to parsed nodes. Line and column are 1-based.
struct SourceSpan {
  uint32_t start = 0;
  uint32_t end = 0;
  uint32_t line = 0;
  uint32_t column = 0;
};

struct MemArg {
  uint32_t align = 0;  // log2 of the alignment hint
  uint32_t offset = 0;
  friend bool operator==(const MemArg&, const MemArg&) = default;
};

// One instruction of a function body. Structured control is kept flat, in
// binary order: block/loop/if open a region that a matching `end` closes.
//
// `sec` marks the secret variant of numeric, memory and select instructions.
// For numeric instructions it applies to every integer type in the
// instruction's signature (except memory addresses, which are always i32).
struct Instr {
  Opcode op = Opcode::Nop;
  Secrecy sec = Secrecy::Public;
  std::optional<ValType> block_type;  // block, loop, if
  uint32_t index = 0;                 // label, function, local, global, type
  MemArg mem;
  uint64_t bits = 0;                  // const payload, zero extended
  std::vector<uint32_t> targets;      // br_table labels; default is `index`

  friend bool operator==(const Instr&, const Instr&) = default;
};

using Expr = std::vector<Instr>;

struct Limits {
  uint32_t min = 0;
  std::optional<uint32_t> max;
  friend bool operator==(const Limits&, const Limits&) = default;
};

struct MemoryType {
  Limits limits;
  Secrecy sec = Secrecy::Public;
  friend bool operator==(const MemoryType&, const MemoryType&) = default;
};

struct TableType {
  Limits limits;
  friend bool operator==(const TableType&, const TableType&) = default;
};

struct GlobalType {
  ValType type;
  bool mut = false;
  friend bool operator==(const GlobalType&, const GlobalType&) = default;
};

enum class ExternKind : uint8_t { Func = 0, Table = 1, Memory = 2, Global = 3 };
std::string_view to_string(ExternKind k);

// Names and spans do not take part in structural equality.
struct DebugInfo {
  std::string name;
  std::vector<std::string> local_names;
  std::vector<SourceSpan> spans;  // parallel to a function body
  SourceSpan span;

  friend bool operator==(const DebugInfo&, const DebugInfo&) { return true; }
};

struct Import {
  std::string module;
  std::string field;
  ExternKind kind = ExternKind::Func;
  uint32_t type_index = 0;  // kind == Func
  TableType table;
  MemoryType memory;
  GlobalType global;
  DebugInfo debug;

  friend bool operator==(const Import&, const Import&) = default;
};

struct Function {
  uint32_t type_index = 0;
  std::vector<ValType> locals;  // excluding params
  Expr body;                    // terminated by its own `end`
  DebugInfo debug;

  friend bool operator==(const Function&, const Function&) = default;
};

struct Global {
  GlobalType type;
  Expr init;  // constant expression, without the terminating `end`
  DebugInfo debug;
  friend bool operator==(const Global&, const Global&) = default;
};

struct Export {
  std::string name;
  ExternKind kind = ExternKind::Func;
  uint32_t index = 0;
  friend bool operator==(const Export&, const Export&) = default;
};

struct ElemSegment {
  uint32_t table = 0;
  Expr offset;
  std::vector<uint32_t> funcs;
  friend bool operator==(const ElemSegment&, const ElemSegment&) = default;
};

struct DataSegment {
  uint32_t memory = 0;
  Expr offset;
  std::vector<uint8_t> bytes;
  friend bool operator==(const DataSegment&, const DataSegment&) = default;
};

// Custom sections are carried through untouched. `after` is the id of the
// last known section that preceded it in the binary (0 when first).
struct CustomSection {
  std::string name;
  std::vector<uint8_t> payload;
  uint8_t after = 0;
  friend bool operator==(const CustomSection&, const CustomSection&) = default;
};

struct Module {
  std::vector<FuncType> types;
  std::vector<Import> imports;
  std::vector<Function> funcs;
  std::vector<TableType> tables;
  std::vector<MemoryType> memories;
  std::vector<Global> globals;
  std::vector<Export> exports;
  std::optional<uint32_t> start;
  std::vector<ElemSegment> elems;
  std::vector<DataSegment> data;
  std::vector<CustomSection> customs;

  friend bool operator==(const Module&, const Module&) = default;

  uint32_t num_imported(ExternKind k) const;
  uint32_t num_funcs() const { return num_imported(ExternKind::Func) + funcs.size(); }
  uint32_t num_tables() const { return num_imported(ExternKind::Table) + tables.size(); }
  uint32_t num_memories() const { return num_imported(ExternKind::Memory) + memories.size(); }
  uint32_t num_globals() const { return num_imported(ExternKind::Global) + globals.size(); }

  // Accessors over the combined (imports first) index spaces. They assume the
  // index is in range.
  uint32_t func_type_index(uint32_t func) const;
  const FuncType& func_type(uint32_t func) const;
  GlobalType global_type(uint32_t global) const;
  std::optional<MemoryType> memory_type() const;
  std::optional<TableType> table_type() const;

  const Export* find_export(std::string_view name) const;
  // Index of `func` within `funcs`, or nullopt for an imported function.
  std::optional<uint32_t> defined_func(uint32_t func) const;
};

// True when the module uses no CT-Wasm construct: every type public, every
// function untrusted, no secret memory, no classify/declassify or secret
// select. Such modules are plain WebAssembly MVP modules.
bool is_public_only(const Module& m);

// Structural consistency failures detected while building modules.
class ModuleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ctwasm

#endif  // CTWASM_AST_H_
