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

#include "ctwasm/json.h"

#include "ctwasm/text.h"

namespace ctwasm {

using nlohmann::json;

json to_json(const SourceSpan& s) {
  return {{"line", s.line}, {"column", s.column}, {"start", s.start}, {"end", s.end}};
}

json to_json(const Value& v) { return to_string(v); }

std::optional<SourceSpan> instr_span(const Module& m, uint32_t func, uint32_t offset) {
  auto d = m.defined_func(func);
  if (func >= m.num_funcs() || !d) return std::nullopt;
  const Function& f = m.funcs[*d];
  if (offset < f.debug.spans.size() && f.debug.spans[offset].line) return f.debug.spans[offset];
  return std::nullopt;
}

json to_json(const ValidationError& e, const Module* m) {
  json j = {{"code", std::string(to_string(e.code))}, {"message", e.message}};
  if (e.func) {
    j["func"] = *e.func;
    j["offset"] = e.offset;
    if (m)
      if (auto s = instr_span(*m, *e.func, e.offset)) j["span"] = to_json(*s);
  }
  return j;
}

json to_json(const Action& a) {
  json j = {{"kind", std::string(to_string(a.kind))}};
  auto values = [](const std::vector<Value>& vs) {
    json arr = json::array();
    for (const Value& v : vs) arr.push_back(to_json(v));
    return arr;
  };
  switch (a.kind) {
    case ActionKind::SafeOp: j["op"] = instr_name(Instr{a.op, a.sec}); break;
    case ActionKind::Branch:
      j["op"] = instr_name(Instr{a.op, a.sec});
      j["condition"] = a.a;
      break;
    case ActionKind::SecretSelect: break;
    case ActionKind::Mem:
      j["op"] = instr_name(Instr{a.op, a.sec});
      j["access"] = a.store ? "store" : "load";
      j["address"] = a.a;
      j["width"] = a.width;
      if (a.value) j["value"] = *a.value;
      break;
    case ActionKind::UnsafeBinop:
      j["op"] = instr_name(Instr{a.op, a.sec});
      j["lhs"] = a.a;
      j["rhs"] = a.b;
      break;
    case ActionKind::Grow:
      j["old_pages"] = a.a;
      j["delta"] = a.b;
      j["result"] = static_cast<int32_t>(a.c);
      break;
    case ActionKind::Call: j["func"] = a.a; break;
    case ActionKind::CallIndirect: j["slot"] = a.a; break;
    case ActionKind::Host:
      j["closure"] = a.a;
      j["trust"] = std::string(to_string(a.trust));
      j["args"] = values(a.args);
      j["results"] = values(a.results);
      j["store_before"] = a.b;
      j["store_after"] = a.c;
      break;
  }
  return j;
}

json to_json(const Verdict& v) {
  json j;
  switch (v.kind) {
    case Verdict::Indistinguishable: j["verdict"] = "indistinguishable"; break;
    case Verdict::Diverged: j["verdict"] = "diverged"; break;
    case Verdict::Incomparable: j["verdict"] = "incomparable"; break;
  }
  j["steps"] = v.steps;
  if (v.kind == Verdict::Diverged) j["step"] = v.step;
  if (!v.explanation.empty()) j["explanation"] = v.explanation;
  if (v.action_a) j["action_a"] = to_json(*v.action_a);
  if (v.action_b) j["action_b"] = to_json(*v.action_b);
  if (v.func) j["func"] = *v.func;
  if (v.pc) j["offset"] = *v.pc;
  if (v.span) j["span"] = to_json(*v.span);
  return j;
}

json to_json(const TrialSummary& s) {
  json j = {{"trials", s.trials},
            {"diverged", s.diverged},
            {"incomparable", s.incomparable},
            {"passed", s.passed()}};
  if (s.first_failing_trial) {
    j["first_failing_trial"] = *s.first_failing_trial;
    j["first_failure"] = to_json(*s.first_failure);
  }
  return j;
}

json to_json(const StripWarning& w) {
  json j = {{"code", w.code}, {"message", w.message}};
  if (w.func) j["func"] = *w.func;
  if (w.offset) j["offset"] = *w.offset;
  return j;
}

json to_json(const Conflict& c) {
  json j = {{"message", c.message}, {"chain", c.chain}, {"suggestion", c.suggestion}};
  if (c.func) j["func"] = *c.func;
  if (c.offset) j["offset"] = *c.offset;
  return j;
}

json to_json(const InferStats& s) {
  return {{"slots", s.slots},
          {"iterations", s.iterations},
          {"demotions", s.demotions},
          {"classify_inserted", s.classify_inserted}};
}

}  // namespace ctwasm
