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

#include "ctwasm/leakage.h"

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

namespace ctwasm {

bool values_indist(const Value& a, const Value& b) {
  if (a.type != b.type) return false;
  return a.bits == b.bits || (sec_of(a.type) == Secrecy::Secret && sec_of(b.type) == Secrecy::Secret);
}

namespace {

bool all_indist(const std::vector<Value>& a, const std::vector<Value>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!values_indist(a[i], b[i])) return false;
  return true;
}

void check_shape(const Store& a, const Store& b) {
  if (a.instances.size() != b.instances.size() || a.funcs.size() != b.funcs.size() ||
      a.globals.size() != b.globals.size() || a.tables.size() != b.tables.size() ||
      a.mems.size() != b.mems.size())
    throw IncomparableError("stores hold different numbers of entities");
  for (size_t i = 0; i < a.funcs.size(); ++i) {
    const FuncInst& x = a.funcs[i];
    const FuncInst& y = b.funcs[i];
    if (x.type != y.type || x.instance != y.instance || x.index != y.index || x.code_hash != y.code_hash ||
        x.is_host() != y.is_host())
      throw IncomparableError("function " + std::to_string(i) + " differs between the stores");
  }
  for (size_t i = 0; i < a.instances.size(); ++i) {
    const ModuleInst& x = a.instances[i];
    const ModuleInst& y = b.instances[i];
    if (x.funcs != y.funcs || x.tables != y.tables || x.mems != y.mems || x.globals != y.globals ||
        x.exports.size() != y.exports.size())
      throw IncomparableError("instance " + std::to_string(i) + " differs between the stores");
    for (auto ix = x.exports.begin(), iy = y.exports.begin(); ix != x.exports.end(); ++ix, ++iy)
      if (ix->first != iy->first || ix->second.kind != iy->second.kind || ix->second.addr != iy->second.addr)
        throw IncomparableError("instance " + std::to_string(i) + " exports differ");
  }
}

}  // namespace

bool stores_indist(const Store& a, const Store& b) {
  check_shape(a, b);
  for (size_t i = 0; i < a.mems.size(); ++i) {
    const MemInst& x = a.mems[i];
    const MemInst& y = b.mems[i];
    if (x.sec != y.sec) return false;
    if (x.sec == Secrecy::Secret ? x.bytes.size() != y.bytes.size() : x.bytes != y.bytes) return false;
  }
  for (size_t i = 0; i < a.globals.size(); ++i)
    if (a.globals[i].type != b.globals[i].type || !values_indist(a.globals[i].value, b.globals[i].value))
      return false;
  return a.tables == b.tables;
}

bool configs_indist(const Config& a, const Config& b) {
  if (!stores_indist(a.store, b.store)) return false;
  if (a.instance != b.instance) return false;
  if (!all_indist(a.stack, b.stack)) return false;
  if (a.frames.size() != b.frames.size()) return false;
  for (size_t i = 0; i < a.frames.size(); ++i) {
    const Frame& x = a.frames[i];
    const Frame& y = b.frames[i];
    if (x.func != y.func || x.pc != y.pc || x.base != y.base || x.arity != y.arity) return false;
    if (!all_indist(x.locals, y.locals)) return false;
    if (x.labels.size() != y.labels.size()) return false;
    for (size_t k = 0; k < x.labels.size(); ++k) {
      const Label& l = x.labels[k];
      const Label& m = y.labels[k];
      if (l.arity != m.arity || l.target != m.target || l.height != m.height || l.loop != m.loop) return false;
    }
  }
  if (a.status != b.status) return false;
  if (a.status == Status::Trapped && a.trap != b.trap) return false;
  if (a.pending_host != b.pending_host) return false;
  return all_indist(a.results, b.results);
}

bool actions_indist(const Action& a, const Action& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ActionKind::SafeOp: return a.op == b.op && a.sec == b.sec;
    case ActionKind::SecretSelect: return true;
    case ActionKind::Host:
      if (a.trust == Trust::Untrusted && b.trust == Trust::Untrusted)
        return a.a == b.a && a.b == b.b && a.c == b.c && all_indist(a.args, b.args) &&
               all_indist(a.results, b.results);
      return a == b;
    default: return a == b;
  }
}

StoreView project_view(const Store& s) {
  StoreView v;
  for (const ModuleInst& mi : s.instances) {
    InstanceView iv{mi.funcs, mi.tables, mi.mems, mi.globals, {}};
    for (const auto& [name, ext] : mi.exports) iv.exports.push_back({name, {ext.kind, ext.addr}});
    v.instances.push_back(std::move(iv));
  }
  for (const FuncInst& f : s.funcs) v.funcs.push_back(FuncView{f.type, f.instance, f.index, f.code_hash, f.is_host()});
  for (const GlobalInst& g : s.globals) v.globals.push_back(GlobalInst{g.type, project(g.value)});
  v.tables = s.tables;
  for (const MemInst& m : s.mems) {
    MemView mv{m.sec, m.bytes.size(), {}};
    if (m.sec == Secrecy::Public) mv.bytes = m.bytes;
    v.mems.push_back(std::move(mv));
  }
  return v;
}

ConfigView project_view(const Config& c) {
  ConfigView v;
  v.store = project_view(c.store);
  v.instance = c.instance;
  for (const Value& x : c.stack) v.stack.push_back(project(x));
  for (const Frame& f : c.frames) {
    FrameView fv;
    fv.func = f.func;
    fv.pc = f.pc;
    for (const Value& x : f.locals) fv.locals.push_back(project(x));
    for (const Label& l : f.labels) fv.labels.emplace_back(l.arity, l.target, l.height, l.loop);
    fv.base = f.base;
    fv.arity = f.arity;
    v.frames.push_back(std::move(fv));
  }
  v.status = c.status;
  if (c.status == Status::Trapped) v.trap = c.trap;
  v.pending_host = c.pending_host;
  for (const Value& x : c.results) v.results.push_back(project(x));
  return v;
}

Action project(const Action& a) {
  Action p = a;
  switch (a.kind) {
    case ActionKind::SafeOp: {
      Action s;
      s.kind = ActionKind::SafeOp;
      s.op = a.op;
      s.sec = a.sec;
      return s;
    }
    case ActionKind::SecretSelect: return Action{ActionKind::SecretSelect};
    case ActionKind::Host:
      if (a.trust == Trust::Untrusted) {
        Action h;
        h.kind = ActionKind::Host;
        h.a = a.a;
        h.b = a.b;
        h.c = a.c;
        for (const Value& v : a.args) h.args.push_back(project(v));
        for (const Value& v : a.results) h.results.push_back(project(v));
        return h;
      }
      return p;
    default: return p;
  }
}

namespace {

// Position of the instruction a configuration is about to execute.
struct Site {
  std::optional<uint32_t> func, pc;
  std::optional<SourceSpan> span;
};

Site site_of(const Config& c) {
  Site s;
  if (c.frames.empty() || c.pending_host) return s;
  const Frame& f = c.frames.back();
  const FuncInst& fi = c.store.funcs[f.func];
  s.func = fi.index;
  s.pc = f.pc;
  if (fi.module) {
    const Function& fn = fi.module->funcs[fi.index - fi.module->num_imported(ExternKind::Func)];
    if (f.pc < fn.debug.spans.size()) s.span = fn.debug.spans[f.pc];
  }
  return s;
}

bool same_position(const Config& a, const Config& b) {
  if (a.frames.size() != b.frames.size() || a.pending_host != b.pending_host) return false;
  for (size_t i = 0; i < a.frames.size(); ++i)
    if (a.frames[i].func != b.frames[i].func || a.frames[i].pc != b.frames[i].pc) return false;
  return true;
}

Config prepare(std::shared_ptr<const Module> m, const std::string& name, const TwinSide& side,
               const LockstepOptions& options) {
  Store store;
  uint32_t inst = instantiate(store, m, {}, options.exec);
  const ModuleInst& mi = store.instances[inst];
  for (const auto& [off, bytes] : side.memory) {
    if (mi.mems.empty()) throw InvokeError("module has no memory for secret inputs");
    MemInst& mem = store.mems[mi.mems[0]];
    if (static_cast<uint64_t>(off) + bytes.size() > mem.bytes.size())
      throw InvokeError("secret memory region exceeds the memory size");
    std::copy(bytes.begin(), bytes.end(), mem.bytes.begin() + off);
  }
  return make_config(std::move(store), inst, name, side.args, options.fuel, options.exec);
}

std::string describe_end(const Config& c) {
  std::string s(to_string(c.status));
  if (c.status == Status::Trapped) s += " (" + std::string(to_string(c.trap)) + ")";
  return s;
}

}  // namespace

Verdict lockstep_check(std::shared_ptr<const Module> m, const std::string& export_name, const TwinSide& a,
                       const TwinSide& b, const LockstepOptions& options) {
  Verdict v;
  Config ca = prepare(m, export_name, a, options);
  Config cb = prepare(m, export_name, b, options);
  if (!ca.frames.empty() && ca.store.funcs[ca.frames[0].func].type.trust != Trust::Untrusted) {
    v.kind = Verdict::Incomparable;
    v.explanation = "entry function is trusted";
    return v;
  }
  try {
    if (!configs_indist(ca, cb)) {
      v.kind = Verdict::Incomparable;
      v.explanation = "initial configurations are publicly distinguishable";
      return v;
    }
  } catch (const IncomparableError& e) {
    v.kind = Verdict::Incomparable;
    v.explanation = e.what();
    return v;
  }
  auto diverge = [&](uint64_t step, const Site& site, std::string why) {
    v.kind = Verdict::Diverged;
    v.step = step;
    v.func = site.func;
    v.pc = site.pc;
    v.span = site.span;
    v.explanation = std::move(why);
    v.steps = step;
    return v;
  };
  uint64_t n = 0;
  while (!ca.terminal() && !cb.terminal()) {
    Site site = site_of(ca);
    Action x = step(ca);
    Action y = step(cb);
    if (!actions_indist(x, y)) {
      v.action_a = x;
      v.action_b = y;
      return diverge(n, site, "observations differ: " + to_string(x) + " vs " + to_string(y));
    }
    ++n;
    if (!same_position(ca, cb)) return diverge(n - 1, site, "control flow diverged");
    if (options.config_check_interval && n % options.config_check_interval == 0 && !configs_indist(ca, cb))
      return diverge(n - 1, site, "configurations became publicly distinguishable");
  }
  v.steps = n;
  if (ca.status != cb.status || (ca.status == Status::Trapped && ca.trap != cb.trap))
    return diverge(n, site_of(ca), "runs ended differently: " + describe_end(ca) + " vs " + describe_end(cb));
  if (!configs_indist(ca, cb)) return diverge(n, site_of(ca), "final configurations are publicly distinguishable");
  v.kind = Verdict::Indistinguishable;
  return v;
}

namespace {

Value random_value(ValType t, std::mt19937_64& rng) {
  uint64_t bits = rng();
  if (t.num == NumType::I32 || t.num == NumType::F32) bits &= 0xFFFFFFFFu;
  return Value{t, bits};
}

}  // namespace

TrialSummary randomized_ct_trial(std::shared_ptr<const Module> m, const std::string& export_name,
                                 const SecretSpec& spec, uint32_t trials, uint64_t seed,
                                 const LockstepOptions& options, unsigned threads) {
  const Export* ex = m->find_export(export_name);
  if (!ex || ex->kind != ExternKind::Func) throw InvokeError("no exported function named '" + export_name + "'");
  const FuncType& ft = m->func_type(ex->index);
  if (spec.base_args.size() != ft.params.size())
    throw InvokeError("expected " + std::to_string(ft.params.size()) + " arguments, got " +
                      std::to_string(spec.base_args.size()));
  for (uint32_t p : spec.secret_params)
    if (p >= ft.params.size()) throw InvokeError("secret parameter index out of range");

  TwinSide zero;
  zero.args = spec.base_args;
  for (uint32_t p : spec.secret_params) zero.args[p] = Value::zero(ft.params[p]);
  for (auto [off, len] : spec.secret_memory) zero.memory.push_back({off, std::vector<uint8_t>(len, 0)});

  // Draw every random side up front so the result is independent of threading.
  std::mt19937_64 rng(seed);
  std::vector<TwinSide> sides(trials);
  for (TwinSide& side : sides) {
    side.args = zero.args;
    for (uint32_t p : spec.secret_params) side.args[p] = random_value(ft.params[p], rng);
    for (auto [off, len] : spec.secret_memory) {
      std::vector<uint8_t> bytes(len);
      for (uint8_t& byte : bytes) byte = static_cast<uint8_t>(rng());
      side.memory.push_back({off, std::move(bytes)});
    }
  }

  TrialSummary sum;
  sum.trials = trials;
  sum.verdicts.resize(trials);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, std::max<uint32_t>(trials, 1));
  std::atomic<uint32_t> next{0};
  std::vector<std::string> errors(trials);
  auto worker = [&] {
    for (uint32_t t; (t = next++) < trials;) {
      try {
        sum.verdicts[t] = lockstep_check(m, export_name, zero, sides[t], options);
      } catch (const std::exception& e) {
        errors[t] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();
  for (uint32_t t = 0; t < trials; ++t)
    if (!errors[t].empty()) throw InvokeError("trial " + std::to_string(t) + ": " + errors[t]);

  for (uint32_t t = 0; t < trials; ++t) {
    const Verdict& v = sum.verdicts[t];
    if (v.kind == Verdict::Indistinguishable) continue;
    if (v.kind == Verdict::Diverged) ++sum.diverged;
    else ++sum.incomparable;
    if (!sum.first_failing_trial) {
      sum.first_failing_trial = t;
      sum.first_failure = v;
    }
  }
  return sum;
}

std::vector<uint32_t> resolve_params(const Module& m, const std::string& export_name,
                                     const std::vector<std::string>& names) {
  const Export* ex = m.find_export(export_name);
  if (!ex || ex->kind != ExternKind::Func) throw InvokeError("no exported function named '" + export_name + "'");
  const FuncType& ft = m.func_type(ex->index);
  auto def = m.defined_func(ex->index);
  const Function* fn = def ? &m.funcs[*def] : nullptr;
  std::vector<uint32_t> out;
  for (const std::string& raw : names) {
    std::string name = !raw.empty() && raw[0] == '$' ? raw.substr(1) : raw;
    if (name.empty()) continue;
    if (std::all_of(name.begin(), name.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      uint32_t i = static_cast<uint32_t>(std::stoul(name));
      if (i >= ft.params.size()) throw InvokeError("parameter index " + name + " out of range");
      out.push_back(i);
      continue;
    }
    bool found = false;
    for (uint32_t i = 0; fn && i < ft.params.size() && i < fn->debug.local_names.size(); ++i) {
      std::string p = fn->debug.local_names[i];
      if (!p.empty() && p[0] == '$') p = p.substr(1);
      bool digits_follow = p.size() > name.size() && p.compare(0, name.size(), name) == 0 &&
                           std::all_of(p.begin() + static_cast<ptrdiff_t>(name.size()), p.end(),
                                       [](char c) { return c >= '0' && c <= '9'; });
      if (p == name || digits_follow) {
        out.push_back(i);
        found = true;
      }
    }
    if (!found) throw InvokeError("no parameter named '" + raw + "'");
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace ctwasm
