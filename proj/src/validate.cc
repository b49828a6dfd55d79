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

#include "ctwasm/validate.h"

#include <set>

namespace ctwasm {

namespace {

constexpr std::pair<ErrorCode, std::string_view> kCodeNames[] = {
    {ErrorCode::SyntaxIndex, "SyntaxIndex"},
    {ErrorCode::StackUnderflow, "StackUnderflow"},
    {ErrorCode::TypeMismatch, "TypeMismatch"},
    {ErrorCode::SecretCondition, "SecretCondition"},
    {ErrorCode::SecretMemoryIndex, "SecretMemoryIndex"},
    {ErrorCode::MemorySecrecyMismatch, "MemorySecrecyMismatch"},
    {ErrorCode::DeclassifyRequiresTrusted, "DeclassifyRequiresTrusted"},
    {ErrorCode::TrustViolationCall, "TrustViolationCall"},
    {ErrorCode::UnsafeOpOnSecret, "UnsafeOpOnSecret"},
    {ErrorCode::FloatSecrecy, "FloatSecrecy"},
    {ErrorCode::MutabilityViolation, "MutabilityViolation"},
    {ErrorCode::AlignmentViolation, "AlignmentViolation"},
};

NumType num_of(OpType t) {
  switch (t) {
    case OpType::I64: return NumType::I64;
    case OpType::F32: return NumType::F32;
    case OpType::F64: return NumType::F64;
    default: return NumType::I32;
  }
}

bool float_side(const OpInfo& info) {
  auto f = [](OpType t) { return t == OpType::F32 || t == OpType::F64; };
  return f(info.type) || f(info.src);
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  for (auto& [c, n] : kCodeNames)
    if (c == code) return n;
  return "?";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) {
  for (auto& [c, n] : kCodeNames)
    if (n == name) return c;
  return std::nullopt;
}

std::string to_string(const CtType& t) {
  switch (t.kind) {
    case CtType::Any: return "TAny";
    case CtType::Secret: return "TSecret";
    case CtType::Some: return to_string(t.type);
  }
  return "?";
}

std::optional<CtType> unify(CtType a, CtType b) {
  if (a.kind == CtType::Any) return b;
  if (b.kind == CtType::Any) return a;
  if (a.kind == CtType::Secret && b.kind == CtType::Secret) return a;
  if (a.kind == CtType::Secret) std::swap(a, b);
  if (b.kind == CtType::Secret) {
    if (sec_of(a.type) == Secrecy::Secret) return a;
    return std::nullopt;
  }
  if (a.type == b.type) return a;
  return std::nullopt;
}

Ctx module_ctx(const Module& m) {
  Ctx ctx;
  ctx.types = m.types;
  for (uint32_t i = 0; i < m.num_funcs(); ++i) {
    uint32_t t = m.func_type_index(i);
    ctx.funcs.push_back(t < m.types.size() ? m.types[t] : FuncType{});
  }
  for (uint32_t i = 0; i < m.num_globals(); ++i) ctx.globals.push_back(m.global_type(i));
  if (auto t = m.table_type()) ctx.table = t->limits.min;
  ctx.memory = m.memory_type();
  return ctx;
}

Ctx function_ctx(const Module& m, uint32_t defined_index) {
  Ctx ctx = module_ctx(m);
  const Function& f = m.funcs.at(defined_index);
  if (f.type_index < m.types.size()) {
    const FuncType& ft = m.types[f.type_index];
    ctx.trust = ft.trust;
    ctx.locals = ft.params;
    if (!ft.results.empty()) ctx.ret = ft.results[0];
  }
  ctx.locals.insert(ctx.locals.end(), f.locals.begin(), f.locals.end());
  return ctx;
}

FunctionChecker::FunctionChecker(const Ctx& ctx, uint32_t func_index)
    : ctx_(ctx), func_index_(func_index) {
  state_.frames.push_back(ControlFrame{Opcode::Block, ctx.ret, 0});
}

void FunctionChecker::reject(ErrorCode code, std::string message) {
  throw Reject{code, std::move(message)};
}

CtType FunctionChecker::pop() {
  const ControlFrame& f = state_.frames.back();
  if (state_.stack.size() == f.height) {
    if (f.unreachable) return CtType::any();
    reject(ErrorCode::StackUnderflow, "operand stack underflow");
  }
  CtType t = state_.stack.back();
  state_.stack.pop_back();
  return t;
}

CtType FunctionChecker::pop_expect(CtType expected, ErrorCode secret_code) {
  CtType actual = pop();
  auto u = unify(actual, expected);
  if (u) return *u;
  if (actual.kind == CtType::Some && expected.kind == CtType::Some &&
      actual.type.num == expected.type.num && actual.type.is_secret() && !expected.type.is_secret())
    reject(secret_code, "expected " + to_string(expected) + ", found " + to_string(actual));
  reject(ErrorCode::TypeMismatch, "expected " + to_string(expected) + ", found " + to_string(actual));
}

void FunctionChecker::pop_values(const std::vector<ValType>& ts) {
  for (size_t i = ts.size(); i-- > 0;) pop_expect(ts[i]);
}

void FunctionChecker::set_unreachable() {
  if (state_.frames.empty()) return;
  ControlFrame& f = state_.frames.back();
  state_.stack.resize(f.height);
  f.unreachable = true;
}

std::optional<ValType> FunctionChecker::label_type(uint32_t depth, bool* loop) {
  if (depth >= state_.frames.size())
    reject(ErrorCode::SyntaxIndex, "unknown label " + std::to_string(depth));
  const ControlFrame& f = state_.frames[state_.frames.size() - 1 - depth];
  if (loop) *loop = f.op == Opcode::Loop;
  if (f.op == Opcode::Loop) return std::nullopt;
  return f.result;
}

void FunctionChecker::check(const Instr& ins) {
  ++checked_;
  pushed_.emplace_back();
  if (done_) {
    errors_.push_back({ErrorCode::TypeMismatch, func_index_, offset_, "instruction after the end of the function"});
    ++offset_;
    return;
  }
  try {
    apply(ins);
    OpClass cls = op_info(ins.op).cls;
    bool one = cls == OpClass::Const || cls == OpClass::Unop || cls == OpClass::Binop ||
               cls == OpClass::Testop || cls == OpClass::Relop || cls == OpClass::Convert ||
               cls == OpClass::Classify || cls == OpClass::Declassify || cls == OpClass::Load ||
               cls == OpClass::MemorySize || cls == OpClass::MemoryGrow ||
               ins.op == Opcode::Select || ins.op == Opcode::LocalGet || ins.op == Opcode::LocalTee ||
               ins.op == Opcode::GlobalGet;
    if (ins.op == Opcode::Call || ins.op == Opcode::CallIndirect) {
      const FuncType* ft = nullptr;
      if (ins.op == Opcode::Call && ins.index < ctx_.funcs.size()) ft = &ctx_.funcs[ins.index];
      if (ins.op == Opcode::CallIndirect && ins.index < ctx_.types.size()) ft = &ctx_.types[ins.index];
      one = ft && ft->results.size() == 1;
    }
    if (one && !state_.stack.empty() && state_.stack.back().kind == CtType::Some)
      pushed_.back() = state_.stack.back().type;
  } catch (const Reject& r) {
    errors_.push_back({r.code, func_index_, offset_, r.message});
    set_unreachable();
  }
  ++offset_;
}

void FunctionChecker::apply(const Instr& ins) {
  const OpInfo& info = op_info(ins.op);
  if (ins.sec == Secrecy::Secret && !info.secret_capable)
    reject(ErrorCode::FloatSecrecy, std::string(info.name) + " has no secret form");
  switch (ins.op) {
    case Opcode::Unreachable: set_unreachable(); return;
    case Opcode::Nop: return;
    case Opcode::Block:
    case Opcode::Loop:
      state_.frames.push_back(ControlFrame{ins.op, ins.block_type, state_.stack.size()});
      return;
    case Opcode::If: {
      // The frame is opened even when the condition is rejected, so the
      // matching else/end still pair up.
      std::optional<Reject> err;
      try {
        pop_expect(kI32, ErrorCode::SecretCondition);
      } catch (const Reject& r) {
        err = r;
      }
      state_.frames.push_back(ControlFrame{ins.op, ins.block_type, state_.stack.size()});
      if (err) {
        errors_.push_back({err->code, func_index_, offset_, err->message});
        state_.frames.back().unreachable = true;
      }
      return;
    }
    case Opcode::Else: {
      ControlFrame& f = state_.frames.back();
      if (f.op != Opcode::If || f.seen_else) reject(ErrorCode::TypeMismatch, "else without matching if");
      std::optional<Reject> err;
      try {
        if (f.result) pop_expect(*f.result);
        if (state_.stack.size() != f.height)
          reject(ErrorCode::TypeMismatch, "values remaining on the stack at else");
      } catch (const Reject& r) {
        err = r;
      }
      state_.stack.resize(f.height);
      f.unreachable = false;
      f.seen_else = true;
      if (err) errors_.push_back({err->code, func_index_, offset_, err->message});
      return;
    }
    case Opcode::End: {
      std::optional<Reject> err;
      ControlFrame& f = state_.frames.back();
      try {
        if (f.result) pop_expect(*f.result);
        if (state_.stack.size() != f.height)
          reject(ErrorCode::TypeMismatch, "values remaining on the stack at end of block");
        if (f.op == Opcode::If && !f.seen_else && f.result)
          reject(ErrorCode::TypeMismatch, "if without else cannot produce a value");
      } catch (const Reject& r) {
        err = r;
      }
      ControlFrame closed = f;
      state_.frames.pop_back();
      state_.stack.resize(closed.height);
      if (state_.frames.empty()) done_ = true;
      if (closed.result) push(*closed.result);
      if (err) errors_.push_back({err->code, func_index_, offset_, err->message});
      return;
    }
    case Opcode::Br: {
      if (auto t = label_type(ins.index, nullptr)) pop_expect(*t);
      set_unreachable();
      return;
    }
    case Opcode::BrIf: {
      pop_expect(kI32, ErrorCode::SecretCondition);
      if (auto t = label_type(ins.index, nullptr)) push(pop_expect(*t));
      return;
    }
    case Opcode::BrTable: {
      pop_expect(kI32, ErrorCode::SecretCondition);
      auto t = label_type(ins.index, nullptr);
      for (uint32_t target : ins.targets) {
        auto tt = label_type(target, nullptr);
        if (tt.has_value() != t.has_value())
          reject(ErrorCode::TypeMismatch, "br_table targets have different arities");
        if (tt && *tt != *t) reject(ErrorCode::TypeMismatch, "br_table targets have different types");
      }
      if (t) pop_expect(*t);
      set_unreachable();
      return;
    }
    case Opcode::Return:
      if (ctx_.ret) pop_expect(*ctx_.ret);
      set_unreachable();
      return;
    case Opcode::Call: {
      if (ins.index >= ctx_.funcs.size())
        reject(ErrorCode::SyntaxIndex, "unknown function " + std::to_string(ins.index));
      const FuncType& ft = ctx_.funcs[ins.index];
      if (!trust_geq(ctx_.trust, ft.trust))
        reject(ErrorCode::TrustViolationCall, "untrusted code cannot call trusted function " +
                                                  std::to_string(ins.index));
      pop_values(ft.params);
      for (ValType t : ft.results) push(t);
      return;
    }
    case Opcode::CallIndirect: {
      if (!ctx_.table) reject(ErrorCode::SyntaxIndex, "call_indirect without a table");
      if (ins.index >= ctx_.types.size())
        reject(ErrorCode::SyntaxIndex, "unknown type " + std::to_string(ins.index));
      const FuncType& ft = ctx_.types[ins.index];
      if (!trust_geq(ctx_.trust, ft.trust))
        reject(ErrorCode::TrustViolationCall, "untrusted code cannot call_indirect a trusted type");
      pop_expect(kI32, ErrorCode::SecretCondition);
      pop_values(ft.params);
      for (ValType t : ft.results) push(t);
      return;
    }
    case Opcode::Drop: pop(); return;
    case Opcode::Select: {
      if (ins.sec == Secrecy::Public) {
        pop_expect(kI32, ErrorCode::SecretCondition);
        CtType a = pop();
        CtType b = pop();
        auto u = unify(a, b);
        if (!u) reject(ErrorCode::TypeMismatch, "select operands differ: " + to_string(b) + ", " + to_string(a));
        push(*u);
        return;
      }
      pop_expect(kS32);
      CtType a = pop();
      CtType b = pop();
      auto u = unify(a, b);
      if (!u) reject(ErrorCode::TypeMismatch, "select operands differ: " + to_string(b) + ", " + to_string(a));
      if (u->kind == CtType::Some && is_float(u->type.num))
        reject(ErrorCode::FloatSecrecy, "select secret over a float type");
      auto s = unify(*u, CtType::secret());
      if (!s) reject(ErrorCode::TypeMismatch, "select secret requires secret operands, found " + to_string(*u));
      push(*s);
      return;
    }
    case Opcode::LocalGet:
    case Opcode::LocalSet:
    case Opcode::LocalTee: {
      if (ins.index >= ctx_.locals.size())
        reject(ErrorCode::SyntaxIndex, "unknown local " + std::to_string(ins.index));
      ValType t = ctx_.locals[ins.index];
      if (ins.op == Opcode::LocalGet) push(t);
      else if (ins.op == Opcode::LocalSet) pop_expect(t);
      else push(pop_expect(t));
      return;
    }
    case Opcode::GlobalGet:
    case Opcode::GlobalSet: {
      if (ins.index >= ctx_.globals.size())
        reject(ErrorCode::SyntaxIndex, "unknown global " + std::to_string(ins.index));
      const GlobalType& g = ctx_.globals[ins.index];
      if (ins.op == Opcode::GlobalGet) {
        push(g.type);
      } else {
        if (!g.mut) reject(ErrorCode::MutabilityViolation, "global " + std::to_string(ins.index) + " is immutable");
        pop_expect(g.type);
      }
      return;
    }
    case Opcode::MemorySize:
      if (!ctx_.memory) reject(ErrorCode::SyntaxIndex, "memory.size without a memory");
      push(kI32);
      return;
    case Opcode::MemoryGrow:
      if (!ctx_.memory) reject(ErrorCode::SyntaxIndex, "memory.grow without a memory");
      pop_expect(kI32, ErrorCode::SecretMemoryIndex);
      push(kI32);
      return;
    default: break;
  }
  switch (info.cls) {
    case OpClass::Load:
    case OpClass::Store: memory_access(ins, info); return;
    case OpClass::Classify: {
      NumType n = num_of(info.type);
      pop_expect(ValType(n, Secrecy::Public));
      push(ValType(n, Secrecy::Secret));
      return;
    }
    case OpClass::Declassify: {
      if (ctx_.trust != Trust::Trusted)
        reject(ErrorCode::DeclassifyRequiresTrusted, "declassify is only allowed in trusted functions");
      NumType n = num_of(info.type);
      pop_expect(ValType(n, Secrecy::Secret));
      push(ValType(n, Secrecy::Public));
      return;
    }
    default: numeric(ins, info); return;
  }
}

void FunctionChecker::memory_access(const Instr& ins, const OpInfo& info) {
  if (!ctx_.memory) reject(ErrorCode::SyntaxIndex, "memory access without a memory");
  if (ins.mem.align > info.natural_align())
    reject(ErrorCode::AlignmentViolation, "alignment must not be larger than natural");
  ValType vt = typed(num_of(info.type), ins.sec);
  if (sec_of(vt) != ctx_.memory->sec)
    reject(ErrorCode::MemorySecrecyMismatch, std::string(to_string(sec_of(vt))) + " access to a " +
                                                 std::string(to_string(ctx_.memory->sec)) + " memory");
  if (info.cls == OpClass::Load) {
    pop_expect(kI32, ErrorCode::SecretMemoryIndex);
    push(vt);
  } else {
    pop_expect(vt);
    pop_expect(kI32, ErrorCode::SecretMemoryIndex);
  }
}

void FunctionChecker::numeric(const Instr& ins, const OpInfo& info) {
  Secrecy s = ins.sec;
  if (s == Secrecy::Secret && float_side(info))
    reject(ErrorCode::FloatSecrecy, std::string(info.name) + " cannot operate on secrets");
  if (s == Secrecy::Secret && info.unsafe)
    reject(ErrorCode::UnsafeOpOnSecret, std::string(info.name) + " is not constant time on secrets");
  ValType t = typed(num_of(info.type), s);
  switch (info.cls) {
    case OpClass::Const: push(t); return;
    case OpClass::Unop: push(pop_expect(t)); return;
    case OpClass::Binop:
      pop_expect(t);
      pop_expect(t);
      push(t);
      return;
    case OpClass::Testop:
      pop_expect(t);
      push(typed(NumType::I32, s));
      return;
    case OpClass::Relop:
      pop_expect(t);
      pop_expect(t);
      push(typed(NumType::I32, s));
      return;
    case OpClass::Convert:
      pop_expect(typed(num_of(info.src), s));
      push(t);
      return;
    default: reject(ErrorCode::TypeMismatch, "unexpected instruction " + std::string(info.name));
  }
}

namespace {

struct ModuleChecker {
  const Module& m;
  ValidationResult& out;

  void error(ErrorCode code, std::string msg) {
    out.errors.push_back({code, std::nullopt, 0, std::move(msg)});
  }

  // Constant expressions: one constant, or global.get of an immutable import.
  void const_expr(const Expr& e, ValType expected, const std::string& what) {
    Expr body = e;
    if (!body.empty() && body.back().op == Opcode::End) body.pop_back();
    if (body.size() != 1) return error(ErrorCode::TypeMismatch, what + ": constant expression required");
    const Instr& ins = body[0];
    ValType t;
    const OpInfo& info = op_info(ins.op);
    if (info.cls == OpClass::Const) {
      if (ins.sec == Secrecy::Secret && !info.secret_capable)
        return error(ErrorCode::FloatSecrecy, what + ": float constants cannot be secret");
      t = typed(num_of(info.type), ins.sec);
    } else if (ins.op == Opcode::GlobalGet) {
      if (ins.index >= m.num_imported(ExternKind::Global))
        return error(ErrorCode::SyntaxIndex, what + ": unknown imported global " + std::to_string(ins.index));
      GlobalType g = m.global_type(ins.index);
      if (g.mut) return error(ErrorCode::TypeMismatch, what + ": constant expression reads a mutable global");
      t = g.type;
    } else {
      return error(ErrorCode::TypeMismatch, what + ": constant expression required");
    }
    if (t != expected)
      error(ErrorCode::TypeMismatch, what + ": expected " + to_string(expected) + ", found " + to_string(t));
  }

  void limits(const Limits& l, uint64_t bound, const std::string& what) {
    if (l.min > bound) error(ErrorCode::TypeMismatch, what + " size too large");
    if (l.max && *l.max > bound) error(ErrorCode::TypeMismatch, what + " size too large");
    if (l.max && *l.max < l.min) error(ErrorCode::TypeMismatch, what + " maximum below minimum");
  }

  void run() {
    for (size_t i = 0; i < m.types.size(); ++i)
      if (m.types[i].results.size() > 1)
        error(ErrorCode::TypeMismatch, "type " + std::to_string(i) + " has more than one result");
    for (const Import& imp : m.imports) {
      switch (imp.kind) {
        case ExternKind::Func:
          if (imp.type_index >= m.types.size())
            error(ErrorCode::SyntaxIndex, "import " + imp.module + "." + imp.field + ": unknown type");
          break;
        case ExternKind::Table: limits(imp.table.limits, UINT32_MAX, "table"); break;
        case ExternKind::Memory: limits(imp.memory.limits, 65536, "memory"); break;
        case ExternKind::Global:
          if (!well_formed(imp.global.type)) error(ErrorCode::FloatSecrecy, "secret float global");
          break;
      }
    }
    if (m.num_tables() > 1) error(ErrorCode::SyntaxIndex, "multiple tables");
    if (m.num_memories() > 1) error(ErrorCode::SyntaxIndex, "multiple memories");
    for (const TableType& t : m.tables) limits(t.limits, UINT32_MAX, "table");
    for (const MemoryType& mt : m.memories) limits(mt.limits, 65536, "memory");
    for (size_t i = 0; i < m.globals.size(); ++i)
      const_expr(m.globals[i].init, m.globals[i].type.type, "global " + std::to_string(i));

    std::set<std::string> names;
    for (const Export& e : m.exports) {
      if (!names.insert(e.name).second) error(ErrorCode::SyntaxIndex, "duplicate export name " + e.name);
      uint32_t n = 0;
      switch (e.kind) {
        case ExternKind::Func: n = m.num_funcs(); break;
        case ExternKind::Table: n = m.num_tables(); break;
        case ExternKind::Memory: n = m.num_memories(); break;
        case ExternKind::Global: n = m.num_globals(); break;
      }
      if (e.index >= n) error(ErrorCode::SyntaxIndex, "export " + e.name + ": unknown index");
    }
    bool func_types_ok = true;
    for (const Function& f : m.funcs)
      if (f.type_index >= m.types.size()) func_types_ok = false;
    for (const Import& imp : m.imports)
      if (imp.kind == ExternKind::Func && imp.type_index >= m.types.size()) func_types_ok = false;
    if (m.start) {
      if (*m.start >= m.num_funcs()) {
        error(ErrorCode::SyntaxIndex, "unknown start function");
      } else if (func_types_ok) {
        const FuncType& ft = m.func_type(*m.start);
        if (!ft.params.empty() || !ft.results.empty())
          error(ErrorCode::TypeMismatch, "start function must have type [] -> []");
      }
    }
    for (size_t i = 0; i < m.elems.size(); ++i) {
      const ElemSegment& e = m.elems[i];
      if (e.table >= m.num_tables()) error(ErrorCode::SyntaxIndex, "elem " + std::to_string(i) + ": unknown table");
      const_expr(e.offset, kI32, "elem " + std::to_string(i));
      for (uint32_t f : e.funcs)
        if (f >= m.num_funcs()) error(ErrorCode::SyntaxIndex, "elem " + std::to_string(i) + ": unknown function");
    }
    for (size_t i = 0; i < m.data.size(); ++i) {
      const DataSegment& d = m.data[i];
      if (d.memory >= m.num_memories()) error(ErrorCode::SyntaxIndex, "data " + std::to_string(i) + ": unknown memory");
      const_expr(d.offset, kI32, "data " + std::to_string(i));
    }

    TypedModule typed;
    uint32_t imported = m.num_imported(ExternKind::Func);
    for (uint32_t i = 0; i < m.funcs.size(); ++i) {
      const Function& f = m.funcs[i];
      if (f.type_index >= m.types.size()) {
        out.errors.push_back({ErrorCode::SyntaxIndex, imported + i, 0, "unknown type"});
        typed.funcs.emplace_back();
        continue;
      }
      Ctx ctx = function_ctx(m, i);
      FunctionChecker checker(ctx, imported + i);
      for (const Instr& ins : f.body) checker.check(ins);
      out.instructions_checked += checker.checked();
      out.errors.insert(out.errors.end(), checker.errors().begin(), checker.errors().end());
      if (!checker.finished())
        out.errors.push_back({ErrorCode::TypeMismatch, imported + i, static_cast<uint32_t>(f.body.size()),
                              "function body is not terminated"});
      typed.funcs.push_back(FunctionTypes{checker.pushed()});
    }
    if (out.errors.empty()) {
      typed.module = m;
      out.typed = std::move(typed);
    }
  }
};

}  // namespace

ValidationResult validate_module(const Module& m) {
  ValidationResult out;
  ModuleChecker{m, out}.run();
  return out;
}

bool all_untrusted(const Module& m) {
  for (uint32_t i = 0; i < m.num_funcs(); ++i) {
    uint32_t t = m.func_type_index(i);
    if (t < m.types.size() && m.types[t].trust == Trust::Trusted) return false;
  }
  return true;
}

}  // namespace ctwasm
