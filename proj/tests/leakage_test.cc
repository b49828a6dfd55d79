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

#include <gtest/gtest.h>

#include <random>

#include "ctwasm/corpus.h"
#include "ctwasm/leakage.h"
#include "ctwasm/text.h"
#include "support/gen.h"

namespace ctwasm {
namespace {

using testing::source_dir;

const ValType kTypes[] = {kI32, kS32, kI64, kS64, kF32, kF64};

// Small domains so that random triples collide often.
Value small_value(std::mt19937_64& rng) {
  return Value{kTypes[rng() % 6], rng() % 3};
}

Action small_action(std::mt19937_64& rng) {
  static const ActionKind kinds[] = {ActionKind::SafeOp, ActionKind::Branch, ActionKind::SecretSelect,
                                     ActionKind::Mem,    ActionKind::UnsafeBinop, ActionKind::Grow,
                                     ActionKind::Call,   ActionKind::CallIndirect, ActionKind::Host};
  Action a;
  a.kind = kinds[rng() % 9];
  a.op = rng() % 2 ? Opcode::I32Add : Opcode::I32DivU;
  a.sec = rng() % 2 ? Secrecy::Secret : Secrecy::Public;
  a.a = rng() % 2;
  a.b = rng() % 2;
  if (a.kind == ActionKind::Mem) {
    a.width = 4;
    if (rng() % 2) a.value = rng() % 2;
  }
  if (a.kind == ActionKind::Host) {
    a.trust = rng() % 2 ? Trust::Trusted : Trust::Untrusted;
    a.args = {small_value(rng)};
  }
  return a;
}

std::shared_ptr<const Module> load(const std::filesystem::path& p) {
  return std::make_shared<const Module>(parse_module(read_file(p)));
}

TEST(Leakage, ValueExamples) {
  EXPECT_TRUE(values_indist(Value::s32(1), Value::s32(2)));
  EXPECT_FALSE(values_indist(Value::i32(1), Value::i32(2)));
  EXPECT_FALSE(values_indist(Value::i32(7), Value::i64(7)));
  EXPECT_FALSE(values_indist(Value::s32(7), Value::i32(7)));
  EXPECT_TRUE(values_indist(Value::f64_bits(3), Value::f64_bits(3)));
}

TEST(Leakage, ActionExamples) {
  Action add{ActionKind::SafeOp, Opcode::I32Add, Secrecy::Secret};
  EXPECT_TRUE(actions_indist(add, add));
  Action div7{ActionKind::UnsafeBinop, Opcode::I32DivU};
  div7.a = 7;
  div7.b = 2;
  Action div9 = div7;
  div9.a = 9;
  EXPECT_FALSE(actions_indist(div7, div9));
  Action m16{ActionKind::Mem, Opcode::I32Load};
  m16.a = 16;
  m16.width = 4;
  Action m20 = m16;
  m20.a = 20;
  EXPECT_FALSE(actions_indist(m16, m20));
  EXPECT_TRUE(actions_indist(Action{ActionKind::SecretSelect}, Action{ActionKind::SecretSelect}));
  // Untrusted host calls compare projections; trusted ones compare exactly.
  Action h1{ActionKind::Host};
  h1.args = {Value::s32(1)};
  Action h2 = h1;
  h2.args = {Value::s32(2)};
  EXPECT_TRUE(actions_indist(h1, h2));
  h1.trust = h2.trust = Trust::Trusted;
  EXPECT_FALSE(actions_indist(h1, h2));
  h2.args = {Value::s32(1)};
  h2.a = 3;
  EXPECT_FALSE(actions_indist(h1, h2));
}

TEST(Leakage, ConfigExamples) {
  auto m = std::make_shared<const Module>(parse_module(R"((module
    (memory 1 secret)
    (global $g (export "g") (mut i32) (i32.const 0))
    (func (export "f") (param s32) (result s32) (local.get 0))))"));
  Store s;
  uint32_t inst = instantiate(s, m);
  Config a = make_config(s, inst, "f", {Value::s32(1)}, 100);
  EXPECT_TRUE(configs_indist(a, a));
  Config b = make_config(s, inst, "f", {Value::s32(99)}, 100);
  EXPECT_TRUE(configs_indist(a, b));
  b.store.mems[0].bytes[7] = 0xFF;
  EXPECT_TRUE(configs_indist(a, b));
  Config c = a;
  c.store.globals[0].value = Value::i32(1);
  EXPECT_FALSE(configs_indist(a, c));
  Config d = a;
  d.store.mems[0].bytes.resize(2 * 65536);
  EXPECT_FALSE(configs_indist(a, d));
  // Different modules are not comparable at all.
  Store other;
  uint32_t oi = instantiate(other, parse_module("(module (func (export \"f\") (param s32) (result s32) (local.get 0)))"));
  Config e = make_config(other, oi, "f", {Value::s32(1)}, 100);
  EXPECT_THROW(configs_indist(a, e), IncomparableError);
}

TEST(Leakage, EquivalenceRelations) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    Value a = small_value(rng), b = small_value(rng), c = small_value(rng);
    ASSERT_TRUE(values_indist(a, a));
    ASSERT_EQ(values_indist(a, b), values_indist(b, a));
    if (values_indist(a, b) && values_indist(b, c)) ASSERT_TRUE(values_indist(a, c));
    ASSERT_EQ(values_indist(a, b), project(a) == project(b));
    ASSERT_EQ(project(project(a)), project(a));

    Action x = small_action(rng), y = small_action(rng), z = small_action(rng);
    ASSERT_TRUE(actions_indist(x, x));
    ASSERT_EQ(actions_indist(x, y), actions_indist(y, x));
    if (actions_indist(x, y) && actions_indist(y, z)) ASSERT_TRUE(actions_indist(x, z));
    ASSERT_EQ(actions_indist(x, y), project(x) == project(y)) << to_string(x) << " / " << to_string(y);
    ASSERT_EQ(project(project(x)), project(x));
  }
}

// Configurations of one random module that differ in a few randomly chosen
// payloads, public or secret.
Config perturb(const Config& base, std::mt19937_64& rng) {
  Config c = base;
  for (Value& v : c.stack)
    if (rng() % 3 == 0) v.bits = rng() % 2;
  for (Frame& f : c.frames)
    for (Value& v : f.locals)
      if (rng() % 3 == 0) v.bits = rng() % 2;
  for (GlobalInst& g : c.store.globals)
    if (rng() % 3 == 0) g.value.bits = rng() % 2;
  for (MemInst& m : c.store.mems)
    if (!m.bytes.empty() && rng() % 2) m.bytes[rng() % 4] = rng() % 2;
  return c;
}

TEST(Leakage, ConfigRelationIsAnEquivalence) {
  std::mt19937_64 rng(4);
  int related = 0, total = 0;
  for (int n = 0; n < 300; ++n) {
    testing::GenOptions opts;
    opts.imports = false;
    Module m = testing::random_module(rng, opts);
    auto mp = std::make_shared<const Module>(m);
    for (const Export& e : m.exports) {
      if (e.kind != ExternKind::Func) continue;
      Store s;
      uint32_t inst = instantiate(s, mp);
      Config base = make_config(s, inst, e.name, testing::random_args(m.func_type(e.index), rng), 1000);
      // Advance a little so frames and stacks are populated.
      for (uint64_t k = rng() % 20; k > 0 && !base.terminal(); --k) step(base);
      for (int t = 0; t < 12; ++t) {
        Config a = perturb(base, rng), b = perturb(base, rng), c = perturb(base, rng);
        ASSERT_TRUE(configs_indist(a, a));
        bool ab = configs_indist(a, b);
        ASSERT_EQ(ab, configs_indist(b, a));
        if (ab && configs_indist(b, c)) ASSERT_TRUE(configs_indist(a, c));
        ASSERT_EQ(ab, project_view(a) == project_view(b));
        ASSERT_EQ(stores_indist(a.store, b.store), project_view(a.store) == project_view(b.store));
        related += ab;
        ++total;
      }
    }
  }
  // Both outcomes must actually occur.
  EXPECT_GT(related, total / 20);
  EXPECT_LT(related, total - total / 20);
}

TEST(Leakage, SecretConstantsDoNotAffectTyping) {
  std::mt19937_64 rng(8);
  int mutated = 0;
  for (int n = 0; n < 500; ++n) {
    Module m = testing::random_module(rng);
    for (Function& f : m.funcs)
      for (Instr& ins : f.body)
        if (ins.sec == Secrecy::Secret && (ins.op == Opcode::I32Const || ins.op == Opcode::I64Const)) {
          ins.bits = ins.op == Opcode::I32Const ? rng() & 0xFFFFFFFFu : rng();
          ++mutated;
        }
    ASSERT_TRUE(validate_module(m).ok());
  }
  EXPECT_GT(mutated, 100);
}

TEST(Leakage, Salsa20TwoKeys) {
  CorpusEntry e = load_entry(source_dir() / "corpus" / "salsa20");
  auto mp = std::make_shared<const Module>(e.module);
  std::mt19937_64 rng(17);
  TwinSide a, b;
  a.args = b.args = e.secrets.args;
  for (int i = 0; i < 8; ++i) {
    a.args[i] = Value::s32(static_cast<uint32_t>(rng()));
    b.args[i] = Value::s32(static_cast<uint32_t>(rng()));
  }
  std::vector<uint8_t> ma(64), mb(64);
  for (auto& x : ma) x = static_cast<uint8_t>(rng());
  for (auto& x : mb) x = static_cast<uint8_t>(rng());
  a.memory = {{0, ma}};
  b.memory = {{0, mb}};
  Verdict v = lockstep_check(mp, "stream_xor", a, b);
  EXPECT_EQ(v.kind, Verdict::Indistinguishable) << v.explanation;
  EXPECT_GT(v.steps, 1000u);
  Verdict same = lockstep_check(mp, "stream_xor", a, a);
  EXPECT_EQ(same.kind, Verdict::Indistinguishable);
  EXPECT_EQ(same.steps, v.steps);
  // A different public nonce is visible.
  TwinSide c = a;
  c.args[8] = Value::i32(1);
  Verdict pub = lockstep_check(mp, "stream_xor", a, c);
  EXPECT_EQ(pub.kind, Verdict::Incomparable);
}

TEST(Leakage, SecretBranchDiverges) {
  auto mp = load(source_dir() / "tests" / "data" / "secret_branch_unchecked.cwat");
  ASSERT_FALSE(validate_module(*mp).ok());
  TwinSide a{{Value::s32(0)}}, b{{Value::s32(5)}};
  Verdict v = lockstep_check(mp, "check", a, b);
  ASSERT_EQ(v.kind, Verdict::Diverged);
  EXPECT_EQ(v.step, 6u);
  ASSERT_TRUE(v.action_a && v.action_b);
  EXPECT_EQ(v.action_a->kind, ActionKind::Branch);
  EXPECT_EQ(v.action_a->op, Opcode::If);
  EXPECT_EQ(v.action_a->a, 0u);
  EXPECT_EQ(v.action_b->a, 5u);
  ASSERT_TRUE(v.span);
  EXPECT_EQ(v.span->line, 8u);
}

TEST(Leakage, TrustedEntryIsIncomparable) {
  auto mp = std::make_shared<const Module>(
      parse_module("(module (func (export \"f\") trusted (param s32) (result i32) (i32.declassify (local.get 0))))"));
  Verdict v = lockstep_check(mp, "f", TwinSide{{Value::s32(1)}}, TwinSide{{Value::s32(2)}});
  EXPECT_EQ(v.kind, Verdict::Incomparable);
}

TEST(Leakage, TrappingTwinsAgree) {
  auto mp = std::make_shared<const Module>(parse_module(R"((module (memory 1 secret)
    (func (export "f") (param s32 i32) (result s32) (s32.load (local.get 1)))))"));
  Verdict v = lockstep_check(mp, "f", TwinSide{{Value::s32(1), Value::i32(70000)}},
                             TwinSide{{Value::s32(2), Value::i32(70000)}});
  EXPECT_EQ(v.kind, Verdict::Indistinguishable);
  auto loop = std::make_shared<const Module>(parse_module(R"((module
    (func (export "f") (param s32) (loop (br 0)))))"));
  LockstepOptions opts;
  opts.fuel = 5000;
  EXPECT_EQ(lockstep_check(loop, "f", TwinSide{{Value::s32(1)}}, TwinSide{{Value::s32(2)}}, opts).kind,
            Verdict::Indistinguishable);
}

TEST(Leakage, CorpusTrials) {
  for (const CorpusEntry& e : load_corpus(source_dir() / "corpus")) {
    auto mp = std::make_shared<const Module>(e.module);
    TrialSummary sum = randomized_ct_trial(mp, e.secrets.export_name, secret_spec(e.module, e.secrets), 100, 42);
    EXPECT_TRUE(sum.passed()) << e.name << ": "
                              << (sum.first_failure ? sum.first_failure->explanation : std::string());
    EXPECT_EQ(sum.trials, 100u);
  }
}

TEST(Leakage, VerdictsIndependentOfThreads) {
  auto mp = load(source_dir() / "tests" / "data" / "secret_branch_unchecked.cwat");
  SecretSpec spec{{Value::s32(0)}, {0}, {}};
  TrialSummary one = randomized_ct_trial(mp, "check", spec, 64, 9, {}, 1);
  TrialSummary many = randomized_ct_trial(mp, "check", spec, 64, 9, {}, 8);
  EXPECT_EQ(one.diverged, 64u);
  ASSERT_EQ(one.verdicts.size(), many.verdicts.size());
  for (size_t i = 0; i < one.verdicts.size(); ++i) {
    EXPECT_EQ(one.verdicts[i].kind, many.verdicts[i].kind);
    EXPECT_EQ(one.verdicts[i].step, many.verdicts[i].step);
    EXPECT_EQ(one.verdicts[i].action_b, many.verdicts[i].action_b);
  }
  EXPECT_EQ(one.first_failing_trial, many.first_failing_trial);
  CorpusEntry tea = load_entry(source_dir() / "corpus" / "tea");
  auto tm = std::make_shared<const Module>(tea.module);
  auto ts = secret_spec(tea.module, tea.secrets);
  auto t1 = randomized_ct_trial(tm, "encrypt", ts, 20, 5, {}, 1);
  auto t4 = randomized_ct_trial(tm, "encrypt", ts, 20, 5, {}, 4);
  for (size_t i = 0; i < 20; ++i) EXPECT_EQ(t1.verdicts[i].steps, t4.verdicts[i].steps);
}

// Every validated untrusted module is constant-time on random secrets.
TEST(Leakage, RandomUntrustedModulesNeverDiverge) {
  std::mt19937_64 rng(21);
  int checked = 0;
  for (int n = 0; n < 400; ++n) {
    testing::GenOptions opts;
    opts.trusted = false;
    opts.imports = false;
    Module m = testing::random_module(rng, opts);
    ASSERT_TRUE(validate_module(m).ok());
    auto mp = std::make_shared<const Module>(m);
    bool secret_mem = !m.memories.empty() && m.memories[0].sec == Secrecy::Secret;
    for (const Export& e : m.exports) {
      if (e.kind != ExternKind::Func) continue;
      const FuncType& ft = m.func_type(e.index);
      SecretSpec spec;
      spec.base_args = testing::random_args(ft, rng);
      for (uint32_t i = 0; i < ft.params.size(); ++i)
        if (ft.params[i].is_secret()) spec.secret_params.push_back(i);
      if (secret_mem) spec.secret_memory = {{0, 256}};
      LockstepOptions lo;
      lo.fuel = 5000;
      lo.config_check_interval = 16;
      TrialSummary sum = randomized_ct_trial(mp, e.name, spec, 4, n, lo, 1);
      ASSERT_TRUE(sum.passed()) << print_module(m) << "\n" << sum.first_failure->explanation;
      ++checked;
    }
  }
  EXPECT_GT(checked, 200);
}

TEST(Leakage, ResolveParams) {
  CorpusEntry e = load_entry(source_dir() / "corpus" / "salsa20");
  EXPECT_EQ(resolve_params(e.module, "stream_xor", {"key"}), (std::vector<uint32_t>{0, 1, 2, 3, 4, 5, 6, 7}));
  EXPECT_EQ(resolve_params(e.module, "stream_xor", {"len", "0"}), (std::vector<uint32_t>{0, 10}));
}

}  // namespace
}  // namespace ctwasm
