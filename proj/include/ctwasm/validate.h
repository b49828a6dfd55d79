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

// Single pass type checker over a constraint stack.

#ifndef CTWASM_VALIDATE_H_
#define CTWASM_VALIDATE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctwasm/ast.h"

namespace ctwasm {

enum class ErrorCode {
  SyntaxIndex,
  StackUnderflow,
  TypeMismatch,
  SecretCondition,
  SecretMemoryIndex,
  MemorySecrecyMismatch,
  DeclassifyRequiresTrusted,
  TrustViolationCall,
  UnsafeOpOnSecret,
  FloatSecrecy,
  MutabilityViolation,
  AlignmentViolation,
};

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(std::string_view name);

struct ValidationError {
  ErrorCode code;
  std::optional<uint32_t> func;  // function index; empty for module level errors
  uint32_t offset = 0;           // instruction index within the body
  std::string message;
};

// Constraint stack entry. TAny is the top of the lattice; TSecret stands for
// some secret type not yet known.
struct CtType {
  enum Kind : uint8_t { Any, Secret, Some } kind = Any;
  ValType type;

  static CtType any() { return {}; }
  static CtType secret() { return {Secret, {}}; }
  static CtType some(ValType t) { return {Some, t}; }

  friend bool operator==(const CtType& a, const CtType& b) {
    return a.kind == b.kind && (a.kind != Some || a.type == b.type);
  }
};

std::string to_string(const CtType& t);

// Greatest lower bound, or nullopt on mismatch.
std::optional<CtType> unify(CtType a, CtType b);

struct Ctx {
  Trust trust = Trust::Untrusted;
  std::vector<FuncType> funcs;
  std::vector<GlobalType> globals;
  std::optional<uint32_t> table;  // minimum size
  std::optional<MemoryType> memory;
  std::vector<ValType> locals;  // params then declared locals
  std::vector<FuncType> types;
  std::optional<ValType> ret;
  bool has_return = true;
};

Ctx module_ctx(const Module& m);
Ctx function_ctx(const Module& m, uint32_t defined_index);

struct ControlFrame {
  Opcode op;
  std::optional<ValType> result;
  size_t height;
  bool unreachable = false;
  bool seen_else = false;
};

struct CheckState {
  std::vector<CtType> stack;
  std::vector<ControlFrame> frames;
};

// Checks one function body, one instruction at a time.
class FunctionChecker {
 public:
  FunctionChecker(const Ctx& ctx, uint32_t func_index);

  // Applies the typing rule of `ins`. Errors are collected; after an error
  // the current frame is made unreachable so checking can continue.
  void check(const Instr& ins);
  // Returns false if the body did not close its outermost frame.
  bool finished() const { return done_; }

  const CheckState& state() const { return state_; }
  CheckState& mutable_state() { return state_; }
  const std::vector<ValidationError>& errors() const { return errors_; }
  // Type of the single value each instruction pushed, where known.
  const std::vector<std::optional<ValType>>& pushed() const { return pushed_; }
  uint64_t checked() const { return checked_; }

 private:
  struct Reject {
    ErrorCode code;
    std::string message;
  };

  [[noreturn]] void reject(ErrorCode code, std::string message);
  CtType pop();
  CtType pop_expect(CtType expected, ErrorCode secret_code = ErrorCode::TypeMismatch);
  CtType pop_expect(ValType expected, ErrorCode secret_code = ErrorCode::TypeMismatch) {
    return pop_expect(CtType::some(expected), secret_code);
  }
  void push(CtType t) { state_.stack.push_back(t); }
  void push(ValType t) { state_.stack.push_back(CtType::some(t)); }
  void pop_values(const std::vector<ValType>& ts);
  void set_unreachable();
  std::optional<ValType> label_type(uint32_t depth, bool* loop);
  void apply(const Instr& ins);
  void memory_access(const Instr& ins, const OpInfo& info);
  void numeric(const Instr& ins, const OpInfo& info);

  const Ctx& ctx_;
  uint32_t func_index_;
  CheckState state_;
  std::vector<ValidationError> errors_;
  std::vector<std::optional<ValType>> pushed_;
  uint32_t offset_ = 0;
  uint64_t checked_ = 0;
  bool done_ = false;
};

struct FunctionTypes {
  std::vector<std::optional<ValType>> pushed;
};

struct TypedModule {
  Module module;
  std::vector<FunctionTypes> funcs;  // parallel to module.funcs
};

struct ValidationResult {
  std::vector<ValidationError> errors;
  uint64_t instructions_checked = 0;
  std::optional<TypedModule> typed;

  bool ok() const { return errors.empty(); }
};

ValidationResult validate_module(const Module& m);

// True when every function (imported or defined) has an untrusted type.
bool all_untrusted(const Module& m);

}  // namespace ctwasm

#endif  // CTWASM_VALIDATE_H_
