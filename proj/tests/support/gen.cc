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

#include "support/gen.h"

#include <functional>
#include <optional>

#include "ctwasm/opcodes.h"

namespace ctwasm::testing {
namespace {

NumType num(OpType t) {
  switch (t) {
    case OpType::I64: return NumType::I64;
    case OpType::F32: return NumType::F32;
    case OpType::F64: return NumType::F64;
    default: return NumType::I32;
  }
}

Opcode const_op(NumType t) {
  switch (t) {
    case NumType::I32: return Opcode::I32Const;
    case NumType::I64: return Opcode::I64Const;
    case NumType::F32: return Opcode::F32Const;
    case NumType::F64: return Opcode::F64Const;
  }
  return Opcode::I32Const;
}

struct OpTables {
  std::vector<const OpInfo*> binop, unop, relop, testop, convert, load, store;
  OpTables() {
    for (const OpInfo& i : all_opcodes()) {
      switch (i.cls) {
        case OpClass::Binop: binop.push_back(&i); break;
        case OpClass::Unop: unop.push_back(&i); break;
        case OpClass::Relop: relop.push_back(&i); break;
        case OpClass::Testop: testop.push_back(&i); break;
        case OpClass::Convert: convert.push_back(&i); break;
        case OpClass::Load: load.push_back(&i); break;
        case OpClass::Store: store.push_back(&i); break;
        default: break;
      }
    }
  }
};

const OpTables& tables() {
  static const OpTables t;
  return t;
}

struct LabelInfo {
  std::optional<ValType> type;  // values a branch to it carries
  bool loop = false;
};

class Gen {
 public:
  Gen(std::mt19937_64& rng, const GenOptions& o) : rng_(rng), o_(o) {}

  Module run() {
    if (o_.imports && chance(0.3)) {
      int n = 1 + pick(2);
      for (int i = 0; i < n; ++i) {
        FuncType ft = signature();
        Import imp;
        imp.module = "env";
        imp.field = "h" + std::to_string(i);
        imp.kind = ExternKind::Func;
        imp.type_index = static_cast<uint32_t>(m_.types.size());
        m_.types.push_back(ft);
        sigs_.push_back(ft);
        m_.imports.push_back(imp);
      }
    }
    int nf = 1 + pick(o_.max_funcs);
    for (int i = 0; i < nf; ++i) {
      FuncType ft = signature();
      Function f;
      f.type_index = static_cast<uint32_t>(m_.types.size());
      m_.types.push_back(ft);
      sigs_.push_back(ft);
      int nl = pick(o_.max_locals + 1);
      for (int k = 0; k < nl; ++k) f.locals.push_back(type());
      m_.funcs.push_back(std::move(f));
    }
    if (o_.memory && chance(0.7)) {
      MemoryType mt;
      mt.limits.min = 1;
      if (chance(0.5)) mt.limits.max = 1 + pick(3);
      if (o_.secrets && chance(0.5)) mt.sec = Secrecy::Secret;
      m_.memories.push_back(mt);
      if (chance(0.5)) {
        DataSegment d;
        d.offset.push_back(Instr{Opcode::I32Const, Secrecy::Public, {}, 0, {}, static_cast<uint64_t>(pick(256))});
        int n = pick(16);
        for (int k = 0; k < n; ++k) d.bytes.push_back(static_cast<uint8_t>(rng_()));
        m_.data.push_back(std::move(d));
      }
    }
    uint32_t total = static_cast<uint32_t>(sigs_.size());
    if (o_.tables && chance(0.4)) {
      m_.tables.push_back(TableType{Limits{total, total}});
      ElemSegment e;
      e.offset.push_back(Instr{Opcode::I32Const});
      for (uint32_t f = 0; f < total; ++f) e.funcs.push_back(f);
      m_.elems.push_back(std::move(e));
    }
    int ng = pick(4);
    for (int g = 0; g < ng; ++g) {
      Global gl;
      gl.type.type = type();
      gl.type.mut = chance(0.6);
      gl.init.push_back(constant(gl.type.type));
      m_.globals.push_back(std::move(gl));
    }
    uint32_t imported = m_.num_imported(ExternKind::Func);
    for (uint32_t i = 0; i < m_.funcs.size(); ++i) body(imported + i);
    for (uint32_t f = 0; f < total; ++f)
      if (o_.export_all || chance(0.5)) m_.exports.push_back(Export{"f" + std::to_string(f), ExternKind::Func, f});
    if (!m_.memories.empty() && chance(0.3)) m_.exports.push_back(Export{"memory", ExternKind::Memory, 0});
    return std::move(m_);
  }

 private:
  int pick(int n) { return n <= 1 ? 0 : std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  ValType type(bool allow_secret = true) {
    std::vector<ValType> ts = {kI32, kI64};
    if (o_.floats) ts.insert(ts.end(), {kF32, kF64});
    if (o_.secrets && allow_secret) ts.insert(ts.end(), {kS32, kS64, kS32});
    return ts[pick(static_cast<int>(ts.size()))];
  }

  FuncType signature() {
    FuncType ft;
    if (o_.trusted && o_.secrets && chance(0.25)) ft.trust = Trust::Trusted;
    int np = pick(o_.max_params + 1);
    for (int i = 0; i < np; ++i) ft.params.push_back(type());
    if (chance(0.7)) ft.results.push_back(type());
    return ft;
  }

  uint64_t bits(NumType t) {
    static const uint64_t edge[] = {0, 1, 2, 3, 0x7f, 0x80, 0xff, 0x7fffffff, 0x80000000, 0xffffffff,
                                    0x7fffffffffffffffull, 0x8000000000000000ull, ~0ull};
    uint64_t v = chance(0.4) ? edge[pick(13)] : rng_();
    return (t == NumType::I32 || t == NumType::F32) ? v & 0xffffffffu : v;
  }

  Instr constant(ValType t) {
    Instr i{const_op(t.num)};
    i.sec = t.sec;
    i.bits = bits(t.num);
    return i;
  }

  void emit(Instr i) { out_->push_back(std::move(i)); }
  void emit(Opcode op, Secrecy sec = Secrecy::Public, uint32_t index = 0) {
    Instr i{op};
    i.sec = sec;
    i.index = index;
    out_->push_back(std::move(i));
  }

  const FuncType& my_type() const { return sigs_[self_]; }
  Trust trust() const { return my_type().trust; }

  std::vector<uint32_t> callees(std::optional<ValType> result) {
    std::vector<uint32_t> out;
    for (uint32_t f = 0; f < sigs_.size(); ++f) {
      if (!o_.recursion && f >= self_) continue;
      if (!trust_geq(trust(), sigs_[f].trust)) continue;
      std::optional<ValType> r;
      if (!sigs_[f].results.empty()) r = sigs_[f].results[0];
      if (r == result) out.push_back(f);
    }
    return out;
  }

  void address() {
    if (chance(0.8)) {
      emit(Instr{Opcode::I32Const, Secrecy::Public, {}, 0, {}, static_cast<uint64_t>(pick(65536 - 16))});
    } else {
      expr(kI32, 1);
    }
  }

  MemArg memarg(const OpInfo& info) {
    MemArg a;
    a.align = static_cast<uint32_t>(pick(info.natural_align() + 1));
    a.offset = chance(0.7) ? 0 : static_cast<uint32_t>(pick(16));
    return a;
  }

  bool memory_holds(ValType t) const {
    if (m_.memories.empty()) return false;
    return m_.memories[0].sec == t.sec;
  }

  void expr(ValType t, int d) {
    for (;;) {
      int c = pick(d > 0 ? 16 : 4);
      if (try_expr(c, t, d)) return;
    }
  }

  bool try_expr(int c, ValType t, int d) {
    const OpTables& tb = tables();
    switch (c) {
      case 0:
      case 1:
        emit(constant(t));
        return true;
      case 2:
      case 3: {
        std::vector<uint32_t> ls;
        for (uint32_t i = 0; i < locals_.size(); ++i)
          if (locals_[i] == t) ls.push_back(i);
        if (ls.empty()) {
          for (uint32_t g = 0; g < m_.globals.size(); ++g)
            if (m_.globals[g].type.type == t) ls.push_back(1000 + g);
          if (ls.empty()) return false;
          emit(Opcode::GlobalGet, Secrecy::Public, ls[pick(static_cast<int>(ls.size()))] - 1000);
          return true;
        }
        uint32_t l = ls[pick(static_cast<int>(ls.size()))];
        if (d > 0 && chance(0.3)) {
          expr(t, d - 1);
          emit(Opcode::LocalTee, Secrecy::Public, l);
        } else {
          emit(Opcode::LocalGet, Secrecy::Public, l);
        }
        return true;
      }
      case 4:
      case 5:
      case 6: {
        std::vector<const OpInfo*> ops;
        for (const OpInfo* i : tb.binop)
          if (num(i->type) == t.num && (!t.is_secret() || (i->secret_capable && !i->unsafe))) ops.push_back(i);
        const OpInfo* op = ops[pick(static_cast<int>(ops.size()))];
        expr(t, d - 1);
        expr(t, d - 1);
        emit(op->op, t.sec);
        return true;
      }
      case 7: {
        std::vector<const OpInfo*> ops;
        for (const OpInfo* i : tb.unop)
          if (num(i->type) == t.num && (!t.is_secret() || i->secret_capable)) ops.push_back(i);
        if (ops.empty()) return false;
        expr(t, d - 1);
        emit(ops[pick(static_cast<int>(ops.size()))]->op, t.sec);
        return true;
      }
      case 8: {
        // Comparisons produce i32 (s32 for secret operands).
        if (t.num != NumType::I32) return false;
        bool test = chance(0.3);
        std::vector<const OpInfo*> ops;
        for (const OpInfo* i : test ? tb.testop : tb.relop) {
          if (t.is_secret() && !i->secret_capable) continue;
          if (!o_.floats && is_float(num(i->type))) continue;
          ops.push_back(i);
        }
        const OpInfo* op = ops[pick(static_cast<int>(ops.size()))];
        ValType operand = typed(num(op->type), t.sec);
        expr(operand, d - 1);
        if (!test) expr(operand, d - 1);
        emit(op->op, t.sec);
        return true;
      }
      case 9: {
        std::vector<const OpInfo*> ops;
        for (const OpInfo* i : tb.convert) {
          if (num(i->type) != t.num) continue;
          if (!o_.floats && is_float(num(i->src))) continue;
          if (t.is_secret() && !(i->secret_capable && is_int(num(i->src)))) continue;
          ops.push_back(i);
        }
        if (ops.empty()) return false;
        const OpInfo* op = ops[pick(static_cast<int>(ops.size()))];
        ValType src = typed(num(op->src), t.sec);
        expr(src, d - 1);
        emit(op->op, t.sec);
        return true;
      }
      case 10: {
        // Coercions.
        if (!is_int(t.num) || !o_.secrets) return false;
        if (t.is_secret()) {
          expr(ValType(t.num), d - 1);
          emit(t.num == NumType::I32 ? Opcode::S32ClassifyI32 : Opcode::S64ClassifyI64);
          return true;
        }
        if (trust() != Trust::Trusted) return false;
        expr(ValType(t.num, Secrecy::Secret), d - 1);
        emit(t.num == NumType::I32 ? Opcode::I32DeclassifyS32 : Opcode::I64DeclassifyS64);
        return true;
      }
      case 11: {
        expr(t, d - 1);
        expr(t, d - 1);
        if (t.is_secret() && chance(0.5)) {
          expr(kS32, d - 1);
          emit(Opcode::Select, Secrecy::Secret);
        } else {
          expr(kI32, d - 1);
          emit(Opcode::Select);
        }
        return true;
      }
      case 12: {
        int kind = pick(o_.loops ? 3 : 2);
        if (kind == 0) {
          Instr b{Opcode::Block};
          b.block_type = t;
          emit(b);
          labels_.push_back({t, false});
          stmts(d - 1);
          if (chance(0.4)) {
            expr(t, d - 1);
            expr(kI32, d - 1);
            emit(Opcode::BrIf, Secrecy::Public, 0);
            emit(Opcode::Drop);
          }
          expr(t, d - 1);
          labels_.pop_back();
          emit(Opcode::End);
        } else if (kind == 1) {
          expr(kI32, d - 1);
          Instr b{Opcode::If};
          b.block_type = t;
          emit(b);
          labels_.push_back({t, false});
          stmts(d - 1);
          expr(t, d - 1);
          emit(Opcode::Else);
          stmts(d - 1);
          expr(t, d - 1);
          labels_.pop_back();
          emit(Opcode::End);
        } else {
          Instr b{Opcode::Loop};
          b.block_type = t;
          emit(b);
          labels_.push_back({std::nullopt, true});
          stmts(d - 1);
          expr(t, d - 1);
          labels_.pop_back();
          emit(Opcode::End);
        }
        return true;
      }
      case 13: {
        bool indirect = !m_.tables.empty() && chance(0.4);
        auto fs = callees(t);
        if (fs.empty()) return false;
        call(fs[pick(static_cast<int>(fs.size()))], indirect, d);
        return true;
      }
      case 14: {
        if (!memory_holds(t)) return false;
        std::vector<const OpInfo*> ops;
        for (const OpInfo* i : tb.load)
          if (num(i->type) == t.num) ops.push_back(i);
        const OpInfo* op = ops[pick(static_cast<int>(ops.size()))];
        address();
        Instr ins{op->op};
        ins.sec = t.sec;
        ins.mem = memarg(*op);
        emit(ins);
        return true;
      }
      case 15: {
        if (t != kI32 || m_.memories.empty()) return false;
        if (chance(0.5)) {
          emit(Opcode::MemorySize);
        } else {
          emit(Instr{Opcode::I32Const, Secrecy::Public, {}, 0, {}, static_cast<uint64_t>(pick(2))});
          emit(Opcode::MemoryGrow);
        }
        return true;
      }
    }
    return false;
  }

  void call(uint32_t f, bool indirect, int d) {
    for (ValType p : sigs_[f].params) expr(p, d - 1);
    if (indirect) {
      uint32_t slot = chance(0.9) ? f : static_cast<uint32_t>(pick(static_cast<int>(sigs_.size()) + 2));
      emit(Instr{Opcode::I32Const, Secrecy::Public, {}, 0, {}, slot});
      emit(Opcode::CallIndirect, Secrecy::Public, m_.func_type_index(f));
    } else {
      emit(Opcode::Call, Secrecy::Public, f);
    }
  }

  void stmts(int d) {
    int n = pick(o_.max_stmts + 1);
    for (int i = 0; i < n; ++i) stmt(d);
  }

  void stmt(int d) {
    for (;;) {
      int c = pick(d > 0 ? 11 : 6);
      if (try_stmt(c, d)) return;
    }
  }

  bool try_stmt(int c, int d) {
    switch (c) {
      case 0:
        expr(type(), d);
        emit(Opcode::Drop);
        return true;
      case 1:
        emit(Opcode::Nop);
        return true;
      case 2:
      case 3: {
        if (locals_.empty()) return false;
        uint32_t l = static_cast<uint32_t>(pick(static_cast<int>(locals_.size())));
        expr(locals_[l], d);
        emit(Opcode::LocalSet, Secrecy::Public, l);
        return true;
      }
      case 4: {
        std::vector<uint32_t> gs;
        for (uint32_t g = 0; g < m_.globals.size(); ++g)
          if (m_.globals[g].type.mut) gs.push_back(g);
        if (gs.empty()) return false;
        uint32_t g = gs[pick(static_cast<int>(gs.size()))];
        expr(m_.globals[g].type.type, d);
        emit(Opcode::GlobalSet, Secrecy::Public, g);
        return true;
      }
      case 5: {
        if (m_.memories.empty()) return false;
        ValType t = type();
        if (!memory_holds(t)) return false;
        std::vector<const OpInfo*> ops;
        for (const OpInfo* i : tables().store)
          if (num(i->type) == t.num) ops.push_back(i);
        const OpInfo* op = ops[pick(static_cast<int>(ops.size()))];
        address();
        expr(t, d);
        Instr ins{op->op};
        ins.sec = t.sec;
        ins.mem = memarg(*op);
        emit(ins);
        return true;
      }
      case 6: {
        emit(Opcode::Block);
        labels_.push_back({std::nullopt, false});
        stmts(d - 1);
        labels_.pop_back();
        emit(Opcode::End);
        return true;
      }
      case 7: {
        if (!o_.loops) return false;
        emit(Opcode::Loop);
        labels_.push_back({std::nullopt, true});
        stmts(d - 1);
        labels_.pop_back();
        emit(Opcode::End);
        return true;
      }
      case 8: {
        expr(kI32, d - 1);
        emit(Opcode::If);
        labels_.push_back({std::nullopt, false});
        stmts(d - 1);
        if (chance(0.5)) {
          emit(Opcode::Else);
          stmts(d - 1);
        }
        labels_.pop_back();
        emit(Opcode::End);
        return true;
      }
      case 9: {
        std::vector<uint32_t> ok;
        for (uint32_t k = 0; k < labels_.size(); ++k) {
          const LabelInfo& l = labels_[labels_.size() - 1 - k];
          if (!l.type && (o_.loops || !l.loop)) ok.push_back(k);
        }
        if (ok.empty()) return false;
        expr(kI32, d - 1);
        if (ok.size() > 1 && chance(0.3)) {
          Instr bt{Opcode::BrTable};
          int n = 1 + pick(3);
          for (int i = 0; i < n; ++i) bt.targets.push_back(ok[pick(static_cast<int>(ok.size()))]);
          bt.index = ok[pick(static_cast<int>(ok.size()))];
          emit(bt);
          // Anything after br_table is unreachable; close with a fresh block
          // so the enclosing sequence stays simple.
          return true;
        }
        emit(Opcode::BrIf, Secrecy::Public, ok[pick(static_cast<int>(ok.size()))]);
        return true;
      }
      case 10: {
        auto fs = callees(std::nullopt);
        if (fs.empty()) return false;
        call(fs[pick(static_cast<int>(fs.size()))], !m_.tables.empty() && chance(0.4), d);
        return true;
      }
    }
    return false;
  }

  void body(uint32_t func) {
    self_ = func;
    Function& f = m_.funcs[func - m_.num_imported(ExternKind::Func)];
    locals_ = my_type().params;
    locals_.insert(locals_.end(), f.locals.begin(), f.locals.end());
    out_ = &f.body;
    labels_.clear();
    labels_.push_back({my_type().results.empty() ? std::nullopt : std::optional<ValType>(my_type().results[0]), false});
    int n = pick(o_.max_stmts + 1);
    bool dead = false;
    for (int i = 0; i < n && !dead; ++i) {
      size_t before = out_->size();
      stmt(o_.depth);
      dead = out_->size() > before && out_->back().op == Opcode::BrTable;
    }
    if (!dead && !my_type().results.empty()) expr(my_type().results[0], o_.depth);
    emit(Opcode::End);
  }

  std::mt19937_64& rng_;
  const GenOptions& o_;
  Module m_;
  std::vector<FuncType> sigs_;
  uint32_t self_ = 0;
  std::vector<ValType> locals_;
  std::vector<LabelInfo> labels_;
  Expr* out_ = nullptr;
};

}  // namespace

Module random_module(std::mt19937_64& rng, const GenOptions& options) { return Gen(rng, options).run(); }

Value random_value(ValType t, std::mt19937_64& rng) {
  static const uint64_t edge[] = {0, 1, 2, 0x7fffffff, 0x80000000, 0xffffffff, 0x8000000000000000ull, ~0ull};
  uint64_t v = std::bernoulli_distribution(0.3)(rng) ? edge[rng() % 8] : rng();
  if (t.num == NumType::I32 || t.num == NumType::F32) v &= 0xffffffffu;
  return Value{t, v};
}

std::vector<Value> random_args(const FuncType& ft, std::mt19937_64& rng) {
  std::vector<Value> out;
  for (ValType p : ft.params) out.push_back(random_value(p, rng));
  return out;
}

Imports host_imports(Store& store, const Module& m) {
  Imports out;
  for (const Import& imp : m.imports) {
    if (imp.kind != ExternKind::Func) continue;
    FuncType ft = m.types.at(imp.type_index);
    HostFunc h{ft, [ft](const HostCall& call) {
                 uint64_t mix = 0x9e3779b97f4a7c15ull;
                 for (const Value& v : call.args) mix = (mix ^ v.bits) * 0x100000001b3ull;
                 std::vector<Value> results;
                 for (ValType t : ft.results) {
                   uint64_t bits = t.num == NumType::I32 || t.num == NumType::F32 ? mix & 0xFFFFFFFFu : mix;
                   results.push_back(Value{t, bits});
                 }
                 return results;
               }};
    out[{imp.module, imp.field}] = Extern{ExternKind::Func, store.add_host_func(std::move(h))};
  }
  return out;
}

std::filesystem::path source_dir() { return CTWASM_SOURCE_DIR; }

}  // namespace ctwasm::testing
