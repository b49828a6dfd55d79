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

#include "ctwasm/strip.h"

#include "ctwasm/binary.h"

namespace ctwasm {

RefuseUnvalidated::RefuseUnvalidated(std::vector<ValidationError> errors)
    : std::runtime_error("input does not validate (" + std::to_string(errors.size()) + " errors)"),
      errors_(std::move(errors)) {}

namespace {

ValType pub(ValType t) { return ValType(t.num, Secrecy::Public); }

FuncType pub(const FuncType& ft) {
  FuncType out;
  for (ValType t : ft.params) out.params.push_back(pub(t));
  for (ValType t : ft.results) out.results.push_back(pub(t));
  return out;
}

Instr op(Opcode o, uint32_t index = 0) {
  Instr i;
  i.op = o;
  i.index = index;
  return i;
}

Instr i32_const(int32_t v) {
  Instr i = op(Opcode::I32Const);
  i.bits = static_cast<uint32_t>(v);
  return i;
}

bool is_coercion(Opcode o) {
  OpClass c = op_info(o).cls;
  return c == OpClass::Classify || c == OpClass::Declassify;
}

struct SelectLocals {
  std::optional<uint32_t> cond, v32, v64;
};

// Erases one body. With `rewrite` set, each secret select whose operand type
// is known from `pushed` becomes the mask sequence.
void erase_function(Function& f, uint32_t num_params, const std::vector<std::optional<ValType>>* pushed) {
  for (ValType& t : f.locals) t = pub(t);
  Expr body;
  std::vector<SourceSpan> spans;
  bool has_spans = f.debug.spans.size() == f.body.size();
  SelectLocals locals;
  auto fresh = [&](std::optional<uint32_t>& slot, ValType t) {
    if (!slot) {
      slot = num_params + static_cast<uint32_t>(f.locals.size());
      f.locals.push_back(t);
      if (!f.debug.local_names.empty()) f.debug.local_names.emplace_back();
    }
    return *slot;
  };
  // The operand type of a select is the type of the value pushed before it by
  // the instruction sequence; the validator records it as the select's result.
  for (size_t pc = 0; pc < f.body.size(); ++pc) {
    Instr ins = f.body[pc];
    SourceSpan span = has_spans ? f.debug.spans[pc] : SourceSpan{};
    if (is_coercion(ins.op)) continue;
    if (ins.op == Opcode::Select && ins.sec == Secrecy::Secret && pushed && pc < pushed->size() &&
        (*pushed)[pc]) {
      NumType w = (*pushed)[pc]->num;
      uint32_t c = fresh(locals.cond, kI32);
      uint32_t v = w == NumType::I64 ? fresh(locals.v64, kI64) : fresh(locals.v32, kI32);
      for (Instr& s : secret_select_sequence(w, c, v)) {
        body.push_back(s);
        spans.push_back(span);
      }
      continue;
    }
    ins.sec = Secrecy::Public;
    if (ins.block_type) ins.block_type = pub(*ins.block_type);
    body.push_back(ins);
    spans.push_back(span);
  }
  f.body = std::move(body);
  if (has_spans) f.debug.spans = std::move(spans);
}

Module erase(const Module& m, const TypedModule* typed) {
  Module out = m;
  for (FuncType& ft : out.types) ft = pub(ft);
  for (Import& imp : out.imports) {
    imp.memory.sec = Secrecy::Public;
    imp.global.type = pub(imp.global.type);
  }
  for (size_t i = 0; i < out.funcs.size(); ++i) {
    Function& f = out.funcs[i];
    auto np = static_cast<uint32_t>(m.types.at(f.type_index).params.size());
    erase_function(f, np, typed ? &typed->funcs[i].pushed : nullptr);
  }
  for (MemoryType& mt : out.memories) mt.sec = Secrecy::Public;
  for (Global& g : out.globals) {
    g.type.type = pub(g.type.type);
    for (Instr& ins : g.init) ins.sec = Secrecy::Public;
  }
  for (ElemSegment& e : out.elems)
    for (Instr& ins : e.offset) ins.sec = Secrecy::Public;
  for (DataSegment& d : out.data)
    for (Instr& ins : d.offset) ins.sec = Secrecy::Public;
  out.customs.clear();
  return out;
}

bool secret_sig(const FuncType& ft) {
  for (ValType t : ft.params)
    if (t.is_secret()) return true;
  for (ValType t : ft.results)
    if (t.is_secret()) return true;
  return false;
}

}  // namespace

std::vector<Instr> secret_select_sequence(NumType width, uint32_t cond_local, uint32_t value_local) {
  bool wide = width == NumType::I64;
  Opcode and_op = wide ? Opcode::I64And : Opcode::I32And;
  Opcode or_op = wide ? Opcode::I64Or : Opcode::I32Or;
  Opcode xor_op = wide ? Opcode::I64Xor : Opcode::I32Xor;
  auto mask = [&](std::vector<Instr>& s) {
    // eqz(c) - 1 is all ones exactly when c is nonzero.
    s.push_back(op(Opcode::LocalGet, cond_local));
    s.push_back(op(Opcode::I32Eqz));
    s.push_back(i32_const(1));
    s.push_back(op(Opcode::I32Sub));
    if (wide) s.push_back(op(Opcode::I64ExtendI32S));
  };
  std::vector<Instr> s;
  s.push_back(op(Opcode::LocalSet, cond_local));
  s.push_back(op(Opcode::LocalSet, value_local));
  mask(s);
  s.push_back(op(and_op));
  s.push_back(op(Opcode::LocalGet, value_local));
  mask(s);
  if (wide) {
    Instr ones = op(Opcode::I64Const);
    ones.bits = ~0ULL;
    s.push_back(ones);
  } else {
    s.push_back(i32_const(-1));
  }
  s.push_back(op(xor_op));
  s.push_back(op(and_op));
  s.push_back(op(or_op));
  return s;
}

Module erase_annotations(const Module& m) { return erase(m, nullptr); }

StripReport strip_module(const Module& m, bool paranoid) {
  ValidationResult vr = validate_module(m);
  if (!vr.ok()) throw RefuseUnvalidated(vr.errors);
  StripReport r;
  r.module = erase(m, &*vr.typed);

  uint32_t fi = 0;
  for (const Import& imp : m.imports) {
    if (imp.kind != ExternKind::Func) continue;
    if (m.types.at(imp.type_index).trust == Trust::Untrusted)
      r.warnings.push_back({"W-IMPORT", fi, std::nullopt,
                            "untrusted import " + imp.module + "." + imp.field +
                                " may be satisfied by a plain WebAssembly function that does not respect the "
                                "untrusted contract"});
    ++fi;
  }
  uint32_t nimp = m.num_imported(ExternKind::Func);
  for (uint32_t i = 0; i < m.funcs.size(); ++i)
    for (uint32_t pc = 0; pc < m.funcs[i].body.size(); ++pc)
      if (m.funcs[i].body[pc].op == Opcode::CallIndirect)
        r.warnings.push_back({"W-INDIRECT", nimp + i, pc,
                              "the trust and secrecy check of this call_indirect is erased"});
  if (paranoid) {
    for (const Export& e : m.exports) {
      if (e.kind == ExternKind::Memory) {
        auto mt = m.memory_type();
        if (mt && mt->sec == Secrecy::Secret)
          r.warnings.push_back({"W-EXPORT-SECRET-MEM", std::nullopt, std::nullopt,
                                "secret memory exported as '" + e.name + "' becomes readable by the host"});
      } else if (e.kind == ExternKind::Func && secret_sig(m.func_type(e.index))) {
        r.warnings.push_back({"W-EXPORT-SECRET-SIG", e.index, std::nullopt,
                              "exported function '" + e.name + "' has secret parameters or results"});
      }
    }
  }
  r.input_bytes = encode_module(m).size();
  r.output_bytes = encode_module(r.module).size();
  return r;
}

std::vector<std::string> ct_constructs(const Module& m) {
  std::vector<std::string> out;
  for (size_t i = 0; i < m.types.size(); ++i) {
    const FuncType& ft = m.types[i];
    if (ft.trust == Trust::Trusted) out.push_back("type " + std::to_string(i) + " is trusted");
    if (secret_sig(ft)) out.push_back("type " + std::to_string(i) + " has a secret value type");
  }
  for (const Import& imp : m.imports) {
    if (imp.kind == ExternKind::Memory && imp.memory.sec == Secrecy::Secret)
      out.push_back("imported memory " + imp.field + " is secret");
    if (imp.kind == ExternKind::Global && imp.global.type.is_secret())
      out.push_back("imported global " + imp.field + " is secret");
  }
  for (const MemoryType& mt : m.memories)
    if (mt.sec == Secrecy::Secret) out.push_back("memory is secret");
  for (size_t g = 0; g < m.globals.size(); ++g)
    if (m.globals[g].type.type.is_secret()) out.push_back("global " + std::to_string(g) + " is secret");
  for (size_t i = 0; i < m.funcs.size(); ++i) {
    const Function& f = m.funcs[i];
    for (ValType t : f.locals)
      if (t.is_secret()) out.push_back("function " + std::to_string(i) + " has a secret local");
    for (size_t pc = 0; pc < f.body.size(); ++pc) {
      const Instr& ins = f.body[pc];
      if (ins.sec == Secrecy::Secret || is_coercion(ins.op) || (ins.block_type && ins.block_type->is_secret()))
        out.push_back("function " + std::to_string(i) + " instruction " + std::to_string(pc));
    }
  }
  return out;
}

}  // namespace ctwasm
