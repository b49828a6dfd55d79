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

#include "ctwasm/infer.h"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>

#include "ctwasm/strip.h"
#include "ctwasm/text.h"

namespace ctwasm {

namespace {

NumType num_of(OpType t) {
  switch (t) {
    case OpType::I64: return NumType::I64;
    case OpType::F32: return NumType::F32;
    case OpType::F64: return NumType::F64;
    default: return NumType::I32;
  }
}

Secrecy parse_secrecy(const nlohmann::json& j, const std::string& where) {
  if (!j.is_string()) throw HintsError(where + ": expected \"public\" or \"secret\"");
  std::string s = j.get<std::string>();
  if (s == "public") return Secrecy::Public;
  if (s == "secret") return Secrecy::Secret;
  throw HintsError(where + ": expected \"public\" or \"secret\", got \"" + s + "\"");
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string strip_dollar(std::string_view s) {
  return std::string(!s.empty() && s[0] == '$' ? s.substr(1) : s);
}

}  // namespace

Hints parse_hints(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw HintsError(std::string("hints are not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw HintsError("hints must be a JSON object");
  Hints h;
  for (auto& [key, val] : j.items()) {
    if (key == "memory") {
      h.memory = parse_secrecy(val, "memory");
    } else if (key == "exports") {
      if (!val.is_object()) throw HintsError("exports: expected an object");
      for (auto& [name, e] : val.items()) {
        ExportHint eh;
        if (!e.is_object()) throw HintsError("exports." + name + ": expected an object");
        for (auto& [k, v] : e.items()) {
          if (k == "params") {
            if (!v.is_object()) throw HintsError("exports." + name + ".params: expected an object");
            for (auto& [p, s] : v.items()) eh.params[p] = parse_secrecy(s, "exports." + name + ".params." + p);
          } else if (k == "result") {
            eh.result = parse_secrecy(v, "exports." + name + ".result");
          } else {
            throw HintsError("exports." + name + ": unknown field '" + k + "'");
          }
        }
        h.exports[name] = std::move(eh);
      }
    } else if (key == "trusted") {
      if (!val.is_array()) throw HintsError("trusted: expected an array");
      for (auto& t : val) {
        if (!t.is_string()) throw HintsError("trusted: expected strings");
        h.trusted.push_back(t.get<std::string>());
      }
    } else {
      throw HintsError("unknown hints field '" + key + "'");
    }
  }
  return h;
}

// Builds the slots and demand edges of a LabelProblem.
class ProblemBuilder {
 public:
  ProblemBuilder(LabelProblem& p, const Hints& hints) : p_(p), m_(p.base_), hints_(hints) {}

  void run() {
    nimp_ = m_.num_imported(ExternKind::Func);
    if (m_.num_memories() > 0) {
      bool pub = hints_.memory && *hints_.memory == Secrecy::Public;
      p_.memory_ = slot("memory", pub ? LabelProblem::Fixed::Public : LabelProblem::Fixed::Secret);
    }
    uint32_t gimp = m_.num_imported(ExternKind::Global);
    for (uint32_t g = 0; g < m_.globals.size(); ++g) {
      const Global& gl = m_.globals[g];
      int s = -1;
      if (is_int(gl.type.type.num)) {
        bool from_import = !gl.init.empty() && gl.init[0].op == Opcode::GlobalGet;
        s = slot("global " + std::to_string(gimp + g),
                 from_import ? LabelProblem::Fixed::Public : LabelProblem::Fixed::Free);
      }
      p_.globals_.push_back(s);
    }
    resolve_hints();
    for (uint32_t d = 0; d < m_.funcs.size(); ++d) declare_function(d);
    for (uint32_t d = 0; d < m_.funcs.size(); ++d) walk(d);
    propagate_trust();
  }

 private:
  using Fixed = LabelProblem::Fixed;
  struct Sym {
    int slot = -1;
    std::optional<NumType> type;  // unknown in unreachable code
  };
  struct Ctrl {
    Opcode op;
    int slot;
    std::optional<NumType> result;
    size_t height;
    bool unreachable = false;
  };

  int slot(std::string description, Fixed fixed = Fixed::Free, std::optional<uint32_t> func = std::nullopt,
           std::optional<uint32_t> offset = std::nullopt) {
    p_.slots_.push_back({std::move(description), fixed, func, offset});
    p_.demand_.emplace_back();
    return static_cast<int>(p_.slots_.size() - 1);
  }

  void demand(int from, int to) {
    if (from >= 0 && to >= 0) p_.demand_[from].push_back(to);
  }

  void root(int s, std::string_view why) {
    if (s < 0) return;
    if (p_.slots_[s].fixed == Fixed::Secret) {
      // A sink placed directly on a slot that must stay secret: give the
      // sink its own public slot so solve() reports the conflict.
      int k = slot(std::string(why), Fixed::Public, p_.slots_[s].func, p_.slots_[s].offset);
      demand(k, s);
      return;
    }
    LabelProblem::Slot& sl = p_.slots_[s];
    if (sl.fixed == Fixed::Free) sl.fixed = Fixed::Public;
    sl.description += " (" + std::string(why) + ")";
  }

  void resolve_hints() {
    for (const auto& [name, eh] : hints_.exports) {
      const Export* e = m_.find_export(name);
      if (!e || e->kind != ExternKind::Func) throw HintsError("hints name unknown export '" + name + "'");
      auto d = m_.defined_func(e->index);
      if (!d) throw HintsError("hinted export '" + name + "' is an import");
      const FuncType& ft = m_.func_type(e->index);
      const Function& f = m_.funcs[*d];
      for (const auto& [pname, sec] : eh.params) {
        std::optional<uint32_t> idx;
        if (all_digits(pname)) {
          idx = static_cast<uint32_t>(std::stoul(pname));
        } else {
          for (uint32_t i = 0; i < ft.params.size() && i < f.debug.local_names.size(); ++i)
            if (strip_dollar(f.debug.local_names[i]) == strip_dollar(pname)) idx = i;
        }
        if (!idx || *idx >= ft.params.size())
          throw HintsError("export '" + name + "' has no parameter '" + pname + "'");
        if (sec == Secrecy::Public) public_params_.insert({*d, *idx});
      }
      if (eh.result && *eh.result == Secrecy::Public) public_results_.insert(*d);
    }
    for (const std::string& t : hints_.trusted) {
      std::optional<uint32_t> func;
      if (const Export* e = m_.find_export(t); e && e->kind == ExternKind::Func) func = e->index;
      if (!func && all_digits(t)) func = static_cast<uint32_t>(std::stoul(t));
      if (!func)
        for (uint32_t d = 0; d < m_.funcs.size(); ++d)
          if (!m_.funcs[d].debug.name.empty() && strip_dollar(m_.funcs[d].debug.name) == strip_dollar(t))
            func = nimp_ + d;
      if (!func || *func >= m_.num_funcs() || *func < nimp_)
        throw HintsError("hints mark unknown function '" + t + "' trusted");
      trusted_.insert(*func - nimp_);
    }
    for (const Export& e : m_.exports)
      if (e.kind == ExternKind::Func)
        if (auto d = m_.defined_func(e.index)) exported_.insert(*d);
    for (const ElemSegment& es : m_.elems)
      for (uint32_t f : es.funcs)
        if (auto d = m_.defined_func(f)) in_table_.insert(*d);
  }

  void declare_function(uint32_t d) {
    const Function& f = m_.funcs[d];
    const FuncType& ft = m_.types.at(f.type_index);
    LabelProblem::FuncLabels fl;
    uint32_t fi = nimp_ + d;
    std::string fname = "function " + std::to_string(fi);
    bool exported = exported_.count(d) > 0;
    bool table = in_table_.count(d) > 0;
    for (uint32_t i = 0; i < ft.params.size() + f.locals.size(); ++i) {
      bool is_param = i < ft.params.size();
      NumType t = is_param ? ft.params[i].num : f.locals[i - ft.params.size()].num;
      if (!is_int(t)) {
        fl.locals.push_back(-1);
        continue;
      }
      Fixed fixed = Fixed::Free;
      if (is_param && table) fixed = Fixed::Public;
      else if (is_param && exported) fixed = public_params_.count({d, i}) ? Fixed::Public : Fixed::Secret;
      std::string what = is_param ? " parameter " : " local ";
      std::string name = i < f.debug.local_names.size() ? f.debug.local_names[i] : std::string();
      fl.locals.push_back(slot(fname + what + std::to_string(i) + (name.empty() ? "" : " " + name), fixed, fi));
    }
    if (!ft.results.empty() && is_int(ft.results[0].num)) {
      Fixed fixed = Fixed::Free;
      if (table) fixed = Fixed::Public;
      else if (exported) fixed = public_results_.count(d) ? Fixed::Public : Fixed::Secret;
      fl.result = slot(fname + " result", fixed, fi);
    }
    fl.node.assign(f.body.size(), -1);
    fl.producer.assign(f.body.size(), {});
    fl.block.assign(f.body.size(), -1);
    p_.funcs_.push_back(std::move(fl));
  }

  void walk(uint32_t d) {
    const Function& f = m_.funcs[d];
    const FuncType& ft = m_.types.at(f.type_index);
    LabelProblem::FuncLabels& fl = p_.funcs_[d];
    uint32_t fi = nimp_ + d;
    std::vector<Sym> stack;
    std::optional<NumType> fres;
    if (!ft.results.empty()) fres = ft.results[0].num;
    std::vector<Ctrl> ctrls{{Opcode::Block, fl.result, fres, 0}};

    for (uint32_t pc = 0; pc < f.body.size() && !ctrls.empty(); ++pc) {
      const Instr& ins = f.body[pc];
      const OpInfo& info = op_info(ins.op);
      std::string where = "function " + std::to_string(fi) + " instruction " + std::to_string(pc) + " (" +
                          instr_name(ins) + ")";
      auto pop = [&]() -> Sym {
        if (stack.size() > ctrls.back().height) {
          Sym s = stack.back();
          stack.pop_back();
          return s;
        }
        return {};
      };
      auto unreachable = [&] {
        stack.resize(ctrls.back().height);
        ctrls.back().unreachable = true;
      };
      // Pushes the value produced here. FromSlot producers demand their source.
      auto push = [&](std::optional<NumType> t, LabelProblem::Producer::Kind kind, int source = -1) {
        Sym s;
        s.type = t;
        if (t && is_int(*t)) {
          s.slot = slot(where, Fixed::Free, fi, pc);
          fl.node[pc] = s.slot;
          fl.producer[pc] = {kind, source, *t};
          if (kind == LabelProblem::Producer::FromSlot) demand(s.slot, source);
        }
        stack.push_back(s);
        return s.slot;
      };
      auto label = [&](uint32_t depth) -> Ctrl& { return ctrls[ctrls.size() - 1 - depth]; };
      auto carries = [&](const Ctrl& c) { return c.op != Opcode::Loop && c.result.has_value(); };

      switch (ins.op) {
        case Opcode::Unreachable: unreachable(); break;
        case Opcode::Nop: break;
        case Opcode::Block:
        case Opcode::Loop:
        case Opcode::If: {
          if (ins.op == Opcode::If) root(pop().slot, "condition of " + where);
          int s = -1;
          std::optional<NumType> rt;
          if (ins.block_type) {
            rt = ins.block_type->num;
            if (is_int(*rt)) s = slot("result of " + where, Fixed::Free, fi, pc);
          }
          fl.block[pc] = s;
          ctrls.push_back({ins.op, s, rt, stack.size()});
          break;
        }
        case Opcode::Else: {
          Ctrl& c = ctrls.back();
          if (c.result) demand(c.slot, pop().slot);
          stack.resize(c.height);
          c.unreachable = false;
          break;
        }
        case Opcode::End: {
          Ctrl c = ctrls.back();
          if (c.result) demand(c.slot, pop().slot);
          stack.resize(c.height);
          ctrls.pop_back();
          if (!ctrls.empty() && c.result)
            push(c.result, c.slot >= 0 ? LabelProblem::Producer::FromSlot : LabelProblem::Producer::Public, c.slot);
          break;
        }
        case Opcode::Br: {
          Ctrl& c = label(ins.index);
          if (carries(c)) demand(c.slot, pop().slot);
          unreachable();
          break;
        }
        case Opcode::BrIf: {
          root(pop().slot, "condition of " + where);
          Ctrl& c = label(ins.index);
          if (carries(c)) {
            Sym v = pop();
            demand(c.slot, v.slot);
            push(c.result, c.slot >= 0 ? LabelProblem::Producer::FromSlot : LabelProblem::Producer::Public, c.slot);
          }
          break;
        }
        case Opcode::BrTable: {
          root(pop().slot, "index of " + where);
          Ctrl& dc = label(ins.index);
          if (carries(dc)) {
            Sym v = pop();
            demand(dc.slot, v.slot);
            for (uint32_t t : ins.targets) demand(label(t).slot, v.slot);
          }
          unreachable();
          break;
        }
        case Opcode::Return:
          if (ctrls[0].result) demand(ctrls[0].slot, pop().slot);
          unreachable();
          break;
        case Opcode::Call: {
          const FuncType& ct = m_.func_type(ins.index);
          auto cd = m_.defined_func(ins.index);
          for (size_t k = ct.params.size(); k-- > 0;) {
            Sym v = pop();
            if (cd) demand(p_.funcs_[*cd].locals[k], v.slot);
            else root(v.slot, "argument of imported function at " + where);
          }
          if (!ct.results.empty()) {
            int r = cd ? p_.funcs_[*cd].result : -1;
            push(ct.results[0].num, r >= 0 ? LabelProblem::Producer::FromSlot : LabelProblem::Producer::Public, r);
          }
          break;
        }
        case Opcode::CallIndirect: {
          const FuncType& ct = m_.types.at(ins.index);
          root(pop().slot, "table index of " + where);
          for (size_t k = ct.params.size(); k-- > 0;) root(pop().slot, "argument of " + where);
          if (!ct.results.empty()) push(ct.results[0].num, LabelProblem::Producer::Public);
          break;
        }
        case Opcode::Drop: pop(); break;
        case Opcode::Select: {
          Sym c = pop();
          Sym b = pop();
          Sym a = pop();
          std::optional<NumType> t = a.type ? a.type : b.type;
          if (t && is_int(*t)) {
            int n = push(t, LabelProblem::Producer::Flexible);
            demand(n, a.slot);
            demand(n, b.slot);
            demand(n, c.slot);
          } else {
            root(c.slot, "condition of " + where);
            push(t, LabelProblem::Producer::Public);
          }
          break;
        }
        case Opcode::LocalGet: {
          int l = fl.locals.at(ins.index);
          push(local_type(f, ft, ins.index), l >= 0 ? LabelProblem::Producer::FromSlot : LabelProblem::Producer::Public,
               l);
          break;
        }
        case Opcode::LocalSet: demand(fl.locals.at(ins.index), pop().slot); break;
        case Opcode::LocalTee: {
          int l = fl.locals.at(ins.index);
          demand(l, pop().slot);
          push(local_type(f, ft, ins.index), l >= 0 ? LabelProblem::Producer::FromSlot : LabelProblem::Producer::Public,
               l);
          break;
        }
        case Opcode::GlobalGet: {
          int g = global_slot(ins.index);
          push(m_.global_type(ins.index).type.num,
               g >= 0 ? LabelProblem::Producer::FromSlot : LabelProblem::Producer::Public, g);
          break;
        }
        case Opcode::GlobalSet: {
          Sym v = pop();
          int g = global_slot(ins.index);
          if (g >= 0) demand(g, v.slot);
          else root(v.slot, "value stored to imported global at " + where);
          break;
        }
        case Opcode::MemorySize: push(NumType::I32, LabelProblem::Producer::Public); break;
        case Opcode::MemoryGrow:
          root(pop().slot, "operand of " + where);
          push(NumType::I32, LabelProblem::Producer::Public);
          break;
        default:
          numeric(info, where, pop, push);
          break;
      }
    }
  }

  template <typename Pop, typename Push>
  void numeric(const OpInfo& info, const std::string& where, Pop& pop, Push& push) {
    using P = LabelProblem::Producer;
    switch (info.cls) {
      case OpClass::Load: {
        root(pop().slot, "address of " + where);
        if (!is_int(num_of(info.type))) root(p_.memory_, "memory read as a float by " + where);
        push(num_of(info.type), p_.memory_ >= 0 ? P::FromSlot : P::Public, p_.memory_);
        return;
      }
      case OpClass::Store: {
        Sym v = pop();
        root(pop().slot, "address of " + where);
        if (is_int(num_of(info.type))) demand(p_.memory_, v.slot);
        else root(p_.memory_, "memory written as a float by " + where);
        return;
      }
      case OpClass::Const: push(num_of(info.type), P::Flexible); return;
      default: break;
    }
    int arity = (info.cls == OpClass::Binop || info.cls == OpClass::Relop) ? 2 : 1;
    Sym args[2];
    for (int i = arity; i-- > 0;) args[i] = pop();
    NumType operand = info.cls == OpClass::Convert ? num_of(info.src) : num_of(info.type);
    NumType result =
        (info.cls == OpClass::Testop || info.cls == OpClass::Relop) ? NumType::I32 : num_of(info.type);
    if (is_int(operand) && is_int(result) && !info.unsafe) {
      int n = push(result, P::Flexible);
      for (int i = 0; i < arity; ++i) demand(n, args[i].slot);
      return;
    }
    if (is_int(operand))
      for (int i = 0; i < arity; ++i)
        root(args[i].slot, std::string(info.unsafe ? "operand of " : "integer operand of ") + where);
    push(result, P::Public);
  }

  static NumType local_type(const Function& f, const FuncType& ft, uint32_t i) {
    return i < ft.params.size() ? ft.params[i].num : f.locals.at(i - ft.params.size()).num;
  }

  int global_slot(uint32_t g) {
    uint32_t gimp = m_.num_imported(ExternKind::Global);
    return g < gimp ? -1 : p_.globals_.at(g - gimp);
  }

  // Callers of trusted functions must be trusted themselves.
  void propagate_trust() {
    for (uint32_t d : trusted_) p_.funcs_[d].trust = Trust::Trusted;
    bool changed = true;
    while (changed) {
      changed = false;
      for (uint32_t d = 0; d < m_.funcs.size(); ++d) {
        if (p_.funcs_[d].trust == Trust::Trusted) continue;
        for (const Instr& ins : m_.funcs[d].body) {
          if (ins.op != Opcode::Call) continue;
          auto cd = m_.defined_func(ins.index);
          if (cd && p_.funcs_[*cd].trust == Trust::Trusted) {
            p_.funcs_[d].trust = Trust::Trusted;
            changed = true;
            break;
          }
        }
      }
    }
  }

  LabelProblem& p_;
  const Module& m_;
  const Hints& hints_;
  uint32_t nimp_ = 0;
  std::set<std::pair<uint32_t, uint32_t>> public_params_;
  std::set<uint32_t> public_results_, trusted_, exported_, in_table_;
};

LabelProblem LabelProblem::build(const Module& m, const Hints& hints) {
  LabelProblem p;
  p.base_ = erase_annotations(m);
  ValidationResult vr = validate_module(p.base_);
  if (!vr.ok()) throw InputInvalid("input does not validate as plain WebAssembly", vr.errors);
  ProblemBuilder(p, hints).run();
  return p;
}

LabelProblem::Solution LabelProblem::solve() const {
  Solution s;
  size_t n = slots_.size();
  s.labels.assign(n, Secrecy::Secret);
  std::vector<int> parent(n, -1);
  std::vector<char> reported(n, 0);
  std::vector<int> frontier;
  for (size_t i = 0; i < n; ++i)
    if (slots_[i].fixed == Fixed::Public) {
      s.labels[i] = Secrecy::Public;
      frontier.push_back(static_cast<int>(i));
    }
  if (!frontier.empty()) s.iterations = 1;
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int x : frontier) {
      for (int y : demand_[x]) {
        if (s.labels[y] == Secrecy::Public) continue;
        if (slots_[y].fixed == Fixed::Secret) {
          if (reported[y]) continue;
          reported[y] = 1;
          Conflict c;
          c.func = slots_[y].func;
          c.offset = slots_[y].offset;
          c.chain.push_back(slots_[y].description);
          for (int k = x; k >= 0; k = parent[k]) c.chain.push_back(slots_[k].description);
          c.message = "a value that must stay secret (" + slots_[y].description + ") flows into a public position (" +
                      c.chain.back() + ")";
          if (slots_[y].description == "memory")
            c.suggestion = "keep this value in public memory (hint \"memory\": \"public\") or restructure the "
                           "code; declassification is never inserted automatically";
          else if (slots_[y].description.find("parameter") != std::string::npos)
            c.suggestion = "hint this export parameter public if it is not secret";
          else
            c.suggestion = "hint the export result public if it is not secret";
          s.conflicts.push_back(std::move(c));
          continue;
        }
        s.labels[y] = Secrecy::Public;
        parent[y] = x;
        next.push_back(y);
      }
    }
    if (!next.empty()) ++s.iterations;
    frontier = std::move(next);
  }
  return s;
}

Module LabelProblem::emit(const std::vector<Secrecy>& labels, uint32_t* classify_count) const {
  auto lab = [&](int s) { return s >= 0 ? labels.at(s) : Secrecy::Public; };
  Module out = base_;
  uint32_t classified = 0;
  Secrecy mem = lab(memory_);
  for (MemoryType& mt : out.memories) mt.sec = mem;
  for (Import& imp : out.imports)
    if (imp.kind == ExternKind::Memory) imp.memory.sec = mem;
  for (size_t g = 0; g < out.globals.size(); ++g) {
    Global& gl = out.globals[g];
    Secrecy s = lab(globals_[g]);
    gl.type.type = typed(gl.type.type.num, s);
    for (Instr& ins : gl.init)
      if (op_info(ins.op).cls == OpClass::Const) ins.sec = typed(gl.type.type.num, s).sec;
  }
  for (size_t d = 0; d < out.funcs.size(); ++d) {
    Function& f = out.funcs[d];
    const FuncLabels& fl = funcs_[d];
    const FuncType& bt = base_.types.at(f.type_index);
    FuncType ft;
    ft.trust = fl.trust;
    for (size_t i = 0; i < bt.params.size(); ++i) ft.params.push_back(typed(bt.params[i].num, lab(fl.locals[i])));
    for (ValType r : bt.results) ft.results.push_back(typed(r.num, lab(fl.result)));
    auto it = std::find(out.types.begin(), out.types.end(), ft);
    if (it == out.types.end()) {
      out.types.push_back(ft);
      it = out.types.end() - 1;
    }
    f.type_index = static_cast<uint32_t>(it - out.types.begin());
    for (size_t i = 0; i < f.locals.size(); ++i)
      f.locals[i] = typed(f.locals[i].num, lab(fl.locals[bt.params.size() + i]));

    Expr body;
    std::vector<SourceSpan> spans;
    bool has_spans = f.debug.spans.size() == f.body.size();
    for (size_t pc = 0; pc < f.body.size(); ++pc) {
      Instr ins = f.body[pc];
      const OpInfo& info = op_info(ins.op);
      const Producer& pr = fl.producer[pc];
      ins.sec = Secrecy::Public;
      if (pr.kind == Producer::Flexible) ins.sec = lab(fl.node[pc]);
      if ((info.cls == OpClass::Load || info.cls == OpClass::Store) && info.secret_capable)
        ins.sec = mem;
      if (ins.block_type) ins.block_type = typed(ins.block_type->num, lab(fl.block[pc]));
      body.push_back(ins);
      if (has_spans) spans.push_back(f.debug.spans[pc]);
      bool source_public = pr.kind == Producer::Public || (pr.kind == Producer::FromSlot && lab(pr.slot) == Secrecy::Public);
      if (fl.node[pc] >= 0 && source_public && lab(fl.node[pc]) == Secrecy::Secret) {
        Instr c;
        c.op = pr.type == NumType::I64 ? Opcode::S64ClassifyI64 : Opcode::S32ClassifyI32;
        body.push_back(c);
        if (has_spans) spans.push_back(f.debug.spans[pc]);
        ++classified;
      }
    }
    f.body = std::move(body);
    if (has_spans) f.debug.spans = std::move(spans);
  }
  // Imported functions keep their plain types. Drop the base signatures that
  // nothing refers to any more so that emit is stable under erase + rebuild.
  std::vector<int> remap(out.types.size(), -1);
  std::vector<FuncType> kept;
  auto use = [&](uint32_t& idx) {
    if (remap.at(idx) < 0) {
      auto it = std::find(kept.begin(), kept.end(), out.types[idx]);
      remap[idx] = static_cast<int>(it - kept.begin());
      if (it == kept.end()) kept.push_back(out.types[idx]);
    }
    idx = static_cast<uint32_t>(remap[idx]);
  };
  for (Import& imp : out.imports)
    if (imp.kind == ExternKind::Func) use(imp.type_index);
  for (Function& f : out.funcs) {
    use(f.type_index);
    for (Instr& ins : f.body)
      if (ins.op == Opcode::CallIndirect) use(ins.index);
  }
  out.types = std::move(kept);
  if (classify_count) *classify_count = classified;
  return out;
}

InferResult infer_labels(const Module& m, const Hints& hints) {
  LabelProblem p = LabelProblem::build(m, hints);
  LabelProblem::Solution s = p.solve();
  InferResult r;
  r.stats.slots = static_cast<uint32_t>(p.slots().size());
  r.stats.iterations = s.iterations;
  r.stats.demotions = static_cast<uint32_t>(std::count(s.labels.begin(), s.labels.end(), Secrecy::Public));
  r.conflicts = std::move(s.conflicts);
  if (!r.conflicts.empty()) return r;
  r.module = p.emit(s.labels, &r.stats.classify_inserted);
  return r;
}

}  // namespace ctwasm
