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

#include "ctwasm/ast.h"

namespace ctwasm {

Secrecy sec_of(ValType t) {
  return is_float(t.num) ? Secrecy::Public : t.sec;
}

bool trust_geq(Trust tr, Trust callee) {
  return tr == callee || (tr == Trust::Trusted && callee == Trust::Untrusted);
}

ValType classify_result(ValType t) {
  if (!is_int(t.num) || t.sec != Secrecy::Public)
    throw std::invalid_argument("classify expects a public integer type, got " + to_string(t));
  return ValType(t.num, Secrecy::Secret);
}

ValType declassify_result(ValType t) {
  if (!is_int(t.num) || t.sec != Secrecy::Secret)
    throw std::invalid_argument("declassify expects a secret integer type, got " + to_string(t));
  return ValType(t.num, Secrecy::Public);
}

bool well_formed(ValType t) { return is_int(t.num) || t.sec == Secrecy::Public; }

std::string to_string(ValType t) {
  switch (t.num) {
    case NumType::I32: return t.is_secret() ? "s32" : "i32";
    case NumType::I64: return t.is_secret() ? "s64" : "i64";
    case NumType::F32: return t.is_secret() ? "f32<secret>" : "f32";
    case NumType::F64: return t.is_secret() ? "f64<secret>" : "f64";
  }
  return "?";
}

std::string_view to_string(Secrecy s) { return s == Secrecy::Secret ? "secret" : "public"; }
std::string_view to_string(Trust t) { return t == Trust::Trusted ? "trusted" : "untrusted"; }

std::string to_string(const FuncType& ft) {
  std::string out = ft.trust == Trust::Trusted ? "trusted [" : "[";
  for (size_t i = 0; i < ft.params.size(); ++i) {
    if (i) out += ' ';
    out += to_string(ft.params[i]);
  }
  out += "] -> [";
  for (size_t i = 0; i < ft.results.size(); ++i) {
    if (i) out += ' ';
    out += to_string(ft.results[i]);
  }
  return out + "]";
}

std::string_view to_string(ExternKind k) {
  switch (k) {
    case ExternKind::Func: return "func";
    case ExternKind::Table: return "table";
    case ExternKind::Memory: return "memory";
    case ExternKind::Global: return "global";
  }
  return "?";
}

uint32_t Module::num_imported(ExternKind k) const {
  uint32_t n = 0;
  for (const Import& imp : imports)
    if (imp.kind == k) ++n;
  return n;
}

uint32_t Module::func_type_index(uint32_t func) const {
  uint32_t seen = 0;
  for (const Import& imp : imports) {
    if (imp.kind != ExternKind::Func) continue;
    if (seen++ == func) return imp.type_index;
  }
  return funcs.at(func - seen).type_index;
}

const FuncType& Module::func_type(uint32_t func) const {
  return types.at(func_type_index(func));
}

GlobalType Module::global_type(uint32_t global) const {
  uint32_t seen = 0;
  for (const Import& imp : imports) {
    if (imp.kind != ExternKind::Global) continue;
    if (seen++ == global) return imp.global;
  }
  return globals.at(global - seen).type;
}

std::optional<MemoryType> Module::memory_type() const {
  for (const Import& imp : imports)
    if (imp.kind == ExternKind::Memory) return imp.memory;
  if (!memories.empty()) return memories.front();
  return std::nullopt;
}

std::optional<TableType> Module::table_type() const {
  for (const Import& imp : imports)
    if (imp.kind == ExternKind::Table) return imp.table;
  if (!tables.empty()) return tables.front();
  return std::nullopt;
}

const Export* Module::find_export(std::string_view name) const {
  for (const Export& e : exports)
    if (e.name == name) return &e;
  return nullptr;
}

std::optional<uint32_t> Module::defined_func(uint32_t func) const {
  uint32_t imported = num_imported(ExternKind::Func);
  if (func < imported || func - imported >= funcs.size()) return std::nullopt;
  return func - imported;
}

namespace {

bool public_type(ValType t) { return t.sec == Secrecy::Public; }

bool public_functype(const FuncType& ft) {
  if (ft.trust != Trust::Untrusted) return false;
  for (ValType t : ft.params)
    if (!public_type(t)) return false;
  for (ValType t : ft.results)
    if (!public_type(t)) return false;
  return true;
}

bool public_expr(const Expr& body) {
  for (const Instr& ins : body) {
    if (ins.sec != Secrecy::Public) return false;
    if (ins.block_type && !public_type(*ins.block_type)) return false;
    OpClass cls = op_info(ins.op).cls;
    if (cls == OpClass::Classify || cls == OpClass::Declassify) return false;
  }
  return true;
}

}  // namespace

bool is_public_only(const Module& m) {
  for (const FuncType& ft : m.types)
    if (!public_functype(ft)) return false;
  for (const Import& imp : m.imports) {
    if (imp.kind == ExternKind::Memory && imp.memory.sec != Secrecy::Public) return false;
    if (imp.kind == ExternKind::Global && !public_type(imp.global.type)) return false;
  }
  for (const Function& f : m.funcs) {
    for (ValType t : f.locals)
      if (!public_type(t)) return false;
    if (!public_expr(f.body)) return false;
  }
  for (const MemoryType& mt : m.memories)
    if (mt.sec != Secrecy::Public) return false;
  for (const Global& g : m.globals)
    if (!public_type(g.type.type) || !public_expr(g.init)) return false;
  return true;
}

}  // namespace ctwasm
