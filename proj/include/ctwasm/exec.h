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

// Deterministic interpreter. Every executed instruction produces one Action,
// the attacker's observation of that step.

#ifndef CTWASM_EXEC_H_
#define CTWASM_EXEC_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctwasm/ast.h"
#include "ctwasm/validate.h"

namespace ctwasm {

struct Value {
  ValType type;
  uint64_t bits = 0;  // zero extended for 32-bit types

  static Value i32(uint32_t v) { return {kI32, v}; }
  static Value i64(uint64_t v) { return {kI64, v}; }
  static Value s32(uint32_t v) { return {kS32, v}; }
  static Value s64(uint64_t v) { return {kS64, v}; }
  static Value f32_bits(uint32_t v) { return {kF32, v}; }
  static Value f64_bits(uint64_t v) { return {kF64, v}; }
  static Value zero(ValType t) { return {t, 0}; }

  uint32_t u32() const { return static_cast<uint32_t>(bits); }
  friend bool operator==(const Value&, const Value&) = default;
};

std::string to_string(const Value& v);
// Parses `type:value`, e.g. `s32:7`, `i64:-1`, `f32:1.5`.
Value parse_value(std::string_view literal);

enum class TrapKind {
  Unreachable,
  OutOfBounds,
  DivideByZero,
  IntegerOverflow,
  InvalidConversion,
  IndirectCallFailure,
  StackExhaustion,
};
std::string_view to_string(TrapKind k);

enum class ActionKind { SafeOp, Branch, SecretSelect, Mem, UnsafeBinop, Grow, Call, CallIndirect, Host };
std::string_view to_string(ActionKind k);

// The observation made by one step. Field meaning depends on `kind`:
//   SafeOp        op, sec
//   Branch        op, a = condition (or br_table index)
//   SecretSelect  nothing
//   Mem           op, store, a = effective address, width, value iff public memory
//   UnsafeBinop   op, a = lhs, b = rhs
//   Grow          a = old pages, b = delta, c = result
//   Call          a = function index
//   CallIndirect  a = table slot
//   Host          a = closure address, trust, args/results (public projection
//                 when untrusted), b/c = digests of the public pre/post store
struct Action {
  ActionKind kind = ActionKind::SafeOp;
  Opcode op = Opcode::Nop;
  Secrecy sec = Secrecy::Public;
  bool store = false;
  uint32_t width = 0;
  uint64_t a = 0, b = 0, c = 0;
  std::optional<uint64_t> value;
  Trust trust = Trust::Untrusted;
  std::vector<Value> args, results;

  friend bool operator==(const Action&, const Action&) = default;
};

std::string to_string(const Action& a);

class Store;

// A call into the embedder. Untrusted host functions see only the public
// projection of their arguments and of the store.
struct HostCall {
  std::vector<Value> args;
  const Store* store = nullptr;
};

struct HostFunc {
  FuncType type;
  std::function<std::vector<Value>(const HostCall&)> callback;
};

struct FuncInst {
  FuncType type;
  uint32_t instance = 0;
  uint32_t index = 0;  // function index within its module
  std::shared_ptr<const Module> module;
  std::shared_ptr<const HostFunc> host;
  uint64_t code_hash = 0;  // body hash with secret constants masked
  bool is_host() const { return host != nullptr; }
};

struct GlobalInst {
  GlobalType type;
  Value value;
  friend bool operator==(const GlobalInst&, const GlobalInst&) = default;
};

struct TableInst {
  std::vector<std::optional<uint32_t>> elems;  // function addresses
  std::optional<uint32_t> max;
  friend bool operator==(const TableInst&, const TableInst&) = default;
};

struct MemInst {
  Secrecy sec = Secrecy::Public;
  std::vector<uint8_t> bytes;
  uint32_t max_pages = 0;
  uint32_t pages() const { return static_cast<uint32_t>(bytes.size() / 65536); }
  friend bool operator==(const MemInst&, const MemInst&) = default;
};

struct Extern {
  ExternKind kind = ExternKind::Func;
  uint32_t addr = 0;
};

// Compiled control structure of one function body.
struct CodeInfo {
  std::vector<uint32_t> end;   // for block/loop/if: index of the matching end
  std::vector<uint32_t> els;   // for if: index of else, or the end index
  std::vector<std::optional<ValType>> types;  // validator annotations, if any
};

struct ModuleInst {
  std::shared_ptr<const Module> module;
  std::shared_ptr<const std::vector<CodeInfo>> code;  // parallel to module->funcs
  std::vector<uint32_t> funcs, tables, mems, globals;
  std::map<std::string, Extern, std::less<>> exports;
};

class Store {
 public:
  std::vector<ModuleInst> instances;
  std::vector<FuncInst> funcs;
  std::vector<GlobalInst> globals;
  std::vector<TableInst> tables;
  std::vector<MemInst> mems;

  uint32_t add_host_func(HostFunc f);
  uint32_t add_memory(MemInst m);
  uint32_t add_global(GlobalInst g);
};

class InstantiateError : public std::runtime_error {
 public:
  enum Code { UnknownImport, ImportTypeMismatch, DataSegmentOutOfBounds, ElemSegmentOutOfBounds, StartTrap };
  InstantiateError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

class InvokeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExecOptions {
  uint32_t max_pages = 64;        // memory.grow limit unless the module declares less
  uint32_t max_call_depth = 1000;
  uint64_t max_stack = 1 << 20;   // operand stack values
  bool check_types = false;       // compare pushes against validator annotations
};

using Imports = std::map<std::pair<std::string, std::string>, Extern>;

// Instantiates `m`. When `typed` is given, its annotations enable the debug
// type check. Throws InstantiateError.
uint32_t instantiate(Store& store, std::shared_ptr<const Module> m, const Imports& imports = {},
                     const ExecOptions& options = {}, const TypedModule* typed = nullptr);
uint32_t instantiate(Store& store, const Module& m, const Imports& imports = {},
                     const ExecOptions& options = {});

enum class Status { Running, Returned, Trapped, FuelExhausted };
std::string_view to_string(Status s);

struct Label {
  uint32_t arity = 0;
  uint32_t target = 0;  // pc to continue at after a branch
  size_t height = 0;
  bool loop = false;
};

struct Frame {
  uint32_t func = 0;  // function address
  std::vector<Value> locals;
  uint32_t pc = 0;
  std::vector<Label> labels;
  size_t base = 0;
  uint32_t arity = 0;
};

struct Config {
  Store store;
  uint32_t instance = 0;
  std::vector<Value> stack;
  std::vector<Frame> frames;
  Status status = Status::Running;
  TrapKind trap = TrapKind::Unreachable;
  std::optional<uint32_t> pending_host;
  std::vector<Value> results;
  uint64_t steps = 0;
  uint64_t fuel = UINT64_MAX;
  uint64_t type_violations = 0;
  ExecOptions options;

  bool terminal() const { return status != Status::Running; }
};

// Prepares a configuration that calls function address `func` with `args`.
// Throws InvokeError when the arguments do not match the parameters exactly.
Config make_config(Store store, uint32_t func, const std::vector<Value>& args, uint64_t fuel,
                   const ExecOptions& options = {});
Config make_config(Store store, uint32_t instance, std::string_view export_name,
                   const std::vector<Value>& args, uint64_t fuel, const ExecOptions& options = {});

// Executes one instruction. Must not be called on a terminal config.
Action step(Config& cfg);

struct InvokeResult {
  Status status = Status::Returned;
  TrapKind trap = TrapKind::Unreachable;
  std::vector<Value> results;
  std::vector<Action> trace;
  uint64_t steps = 0;
  uint64_t type_violations = 0;
};

// Runs an exported function to completion; `store` receives the final state.
InvokeResult invoke(Store& store, uint32_t instance, std::string_view export_name,
                    const std::vector<Value>& args, uint64_t fuel, bool record_trace = true,
                    const ExecOptions& options = {});

// Public projections: secret payloads replaced by zero, types kept.
Value project(const Value& v);
Store project(const Store& s);
uint64_t public_digest(const Store& s);

// Function address of an exported function, or nullopt.
std::optional<uint32_t> export_func(const Store& s, uint32_t instance, std::string_view name);

}  // namespace ctwasm

#endif  // CTWASM_EXEC_H_
