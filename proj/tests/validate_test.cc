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

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "ctwasm/corpus.h"
#include "ctwasm/text.h"
#include "ctwasm/validate.h"
#include "support/gen.h"

namespace ctwasm {
namespace {

using testing::source_dir;

std::vector<ErrorCode> codes(const std::string& wat) {
  std::vector<ErrorCode> out;
  for (const ValidationError& e : validate_module(parse_module(wat)).errors) out.push_back(e.code);
  return out;
}

std::vector<ErrorCode> one(ErrorCode c) { return {c}; }

TEST(Validate, SecretAddStack) {
  Ctx ctx;
  FunctionChecker fc(ctx, 0);
  fc.mutable_state().frames.push_back(ControlFrame{Opcode::Block, std::nullopt, 0});
  fc.mutable_state().stack = {CtType::some(kS32), CtType::some(kS32)};
  Instr add{Opcode::I32Add};
  add.sec = Secrecy::Secret;
  fc.check(add);
  EXPECT_TRUE(fc.errors().empty());
  EXPECT_EQ(fc.state().stack, std::vector<CtType>{CtType::some(kS32)});
}

TEST(Validate, SecretIfCondition) {
  EXPECT_EQ(codes("(module (func (param s32) (if (local.get 0) (then))))"), one(ErrorCode::SecretCondition));
  EXPECT_EQ(codes("(module (func (param s32) (block (br_if 0 (local.get 0)))))"), one(ErrorCode::SecretCondition));
  EXPECT_TRUE(codes("(module (func (param i32) (if (local.get 0) (then))))").empty());
}

TEST(Validate, UntrustedCallsTrusted) {
  EXPECT_EQ(codes("(module (func $t trusted) (func (call $t)))"), one(ErrorCode::TrustViolationCall));
  EXPECT_TRUE(codes("(module (func $u) (func trusted (call $u)))").empty());
  EXPECT_TRUE(codes("(module (func $t trusted) (func trusted (call $t)))").empty());
}

TEST(Validate, UnsafeOps) {
  for (const char* op : {"s32.div_u", "s32.div_s", "s32.rem_u", "s32.rem_s"})
    EXPECT_EQ(codes(std::string("(module (func (param s32 s32) (result s32) (") + op +
                    " (local.get 0) (local.get 1))))"),
              one(ErrorCode::UnsafeOpOnSecret))
        << op;
  EXPECT_TRUE(codes("(module (func (param i32 i32) (result i32) (i32.div_u (local.get 0) (local.get 1))))").empty());
}

TEST(Validate, Declassify) {
  EXPECT_EQ(codes("(module (func (param s32) (result i32) (i32.declassify (local.get 0))))"),
            one(ErrorCode::DeclassifyRequiresTrusted));
  EXPECT_TRUE(codes("(module (func trusted (param s64) (result i64) (i64.declassify (local.get 0))))").empty());
}

TEST(Validate, MemorySecrecy) {
  EXPECT_EQ(codes("(module (memory 1) (func (param s32) (s32.store (i32.const 0) (local.get 0))))"),
            one(ErrorCode::MemorySecrecyMismatch));
  EXPECT_EQ(codes("(module (memory 1 secret) (func (param i32) (i32.store (i32.const 0) (local.get 0))))"),
            one(ErrorCode::MemorySecrecyMismatch));
  EXPECT_EQ(codes("(module (memory 1 secret) (func (result f32) (f32.load (i32.const 0))))"),
            one(ErrorCode::MemorySecrecyMismatch));
  EXPECT_EQ(codes("(module (memory 1 secret) (func (param s32) (result s64) (s64.load (local.get 0))))"),
            one(ErrorCode::SecretMemoryIndex));
  EXPECT_TRUE(codes("(module (memory 1 secret) (func (result s64) (s64.load32_u (i32.const 0))))").empty());
}

TEST(Validate, Unify) {
  CtType any = CtType::any(), sec = CtType::secret();
  CtType s32 = CtType::some(kS32), i32 = CtType::some(kI32), f32 = CtType::some(kF32), s64 = CtType::some(kS64);
  EXPECT_EQ(unify(any, s32), s32);
  EXPECT_EQ(unify(s32, any), s32);
  EXPECT_EQ(unify(sec, i32), std::nullopt);
  EXPECT_EQ(unify(sec, sec), sec);
  EXPECT_EQ(unify(sec, s64), s64);
  EXPECT_EQ(unify(sec, f32), std::nullopt);
  EXPECT_EQ(unify(s32, i32), std::nullopt);
  EXPECT_EQ(unify(any, any), any);
  EXPECT_EQ(unify(any, sec), sec);
  // Lattice laws over every element.
  std::vector<CtType> all = {any, sec, s32, i32, f32, s64, CtType::some(kI64), CtType::some(kF64)};
  for (const CtType& a : all) {
    EXPECT_EQ(unify(a, a), a);
    EXPECT_EQ(unify(any, a), a);
    for (const CtType& b : all) {
      EXPECT_EQ(unify(a, b), unify(b, a));
      for (const CtType& c : all) {
        auto ab = unify(a, b);
        auto bc = unify(b, c);
        std::optional<CtType> left = ab ? unify(*ab, c) : std::nullopt;
        std::optional<CtType> right = bc ? unify(a, *bc) : std::nullopt;
        EXPECT_EQ(left, right);
      }
    }
  }
}

TEST(Validate, ReportsEveryError) {
  auto r = validate_module(parse_module(R"((module
    (func (param s32) (result i32) (i32.declassify (local.get 0)))
    (func (param s32) (if (local.get 0) (then)))
    (func (param s32 s32) (result s32) (s32.div_u (local.get 0) (local.get 1)) (drop) (local.get 0))))"));
  ASSERT_EQ(r.errors.size(), 3u);
  EXPECT_EQ(r.errors[0].func, 0u);
  EXPECT_EQ(r.errors[1].func, 1u);
  EXPECT_EQ(r.errors[2].func, 2u);
  EXPECT_EQ(r.errors[2].offset, 2u);
  // Recovery inside one function.
  auto two = validate_module(parse_module(R"((module (memory 1)
    (func (param s32) (s32.store (i32.const 0) (local.get 0)) (if (local.get 0) (then)))))"));
  ASSERT_EQ(two.errors.size(), 2u);
  EXPECT_EQ(two.errors[0].code, ErrorCode::MemorySecrecyMismatch);
  EXPECT_EQ(two.errors[1].code, ErrorCode::SecretCondition);
}

TEST(Validate, Structural) {
  EXPECT_EQ(codes("(module (func (call 3)))"), one(ErrorCode::SyntaxIndex));
  EXPECT_EQ(codes("(module (func (drop)))"), one(ErrorCode::StackUnderflow));
  EXPECT_EQ(codes("(module (func (result i32) (i64.const 0)))"), one(ErrorCode::TypeMismatch));
  EXPECT_EQ(codes("(module (global i32 (i32.const 0)) (func (global.set 0 (i32.const 1))))"),
            one(ErrorCode::MutabilityViolation));
  EXPECT_EQ(codes("(module (memory 1) (func (drop (i32.load8_u align=2 (i32.const 0)))))"),
            one(ErrorCode::AlignmentViolation));
  EXPECT_EQ(codes("(module (global f32 (f32.const 0)) (global s32 (i32.const 0)))"), one(ErrorCode::TypeMismatch));
  EXPECT_TRUE(codes("(module (global s32 (s32.const 0)))").empty());
  EXPECT_EQ(codes("(module (table 1 funcref) (elem (i32.const 0) 5))"), one(ErrorCode::SyntaxIndex));
  EXPECT_TRUE(codes("(module (func (result s32) (unreachable) (s32.add) (drop) (i64.add) (drop) (s32.const 0)))").empty());
  EXPECT_EQ(codes("(module (func (block (result i32) (block (br_table 0 1 (i32.const 0))) (i32.const 0)) (drop)))"),
            one(ErrorCode::TypeMismatch));
}

TEST(Validate, SelectSecret) {
  EXPECT_TRUE(codes("(module (func (param s32 s32 s32) (result s32) "
                    "(select secret (local.get 0) (local.get 1) (local.get 2))))")
                  .empty());
  EXPECT_TRUE(codes("(module (func (param s32 s32 i32) (result s32) "
                    "(select (local.get 0) (local.get 1) (local.get 2))))")
                  .empty());
  EXPECT_EQ(codes("(module (func (param s32 s32 s32) (result s32) (select (local.get 0) (local.get 1) (local.get 2))))"),
            one(ErrorCode::SecretCondition));
  EXPECT_EQ(codes("(module (func (param i32 i32 s32) (result i32) "
                  "(select secret (local.get 0) (local.get 1) (local.get 2))))"),
            one(ErrorCode::TypeMismatch));
  EXPECT_EQ(codes("(module (func (param f32 f32 s32) (result f32) "
                  "(select secret (local.get 0) (local.get 1) (local.get 2))))"),
            one(ErrorCode::FloatSecrecy));
}

TEST(Validate, Reinterpret) {
  EXPECT_TRUE(codes("(module (func (param i32) (result f32) (f32.reinterpret_i32 (local.get 0))))").empty());
  EXPECT_EQ(codes("(module (func (param s32) (result f32) (f32.reinterpret_s32 (local.get 0))))"),
            one(ErrorCode::FloatSecrecy));
  EXPECT_EQ(codes("(module (func (param f64) (result s64) (s64.reinterpret_f64 (local.get 0))))"),
            one(ErrorCode::FloatSecrecy));
  EXPECT_TRUE(codes("(module (func (param s64) (result s32) (s32.wrap_s64 (local.get 0))))").empty());
}

TEST(Validate, CallIndirectTrust) {
  EXPECT_EQ(codes("(module (type $t (func trusted)) (table 1 funcref) (func (call_indirect (type $t) (i32.const 0))))"),
            one(ErrorCode::TrustViolationCall));
  EXPECT_TRUE(codes("(module (type $t (func)) (table 1 funcref) (func trusted (call_indirect (type $t) (i32.const 0))))")
                  .empty());
  EXPECT_EQ(codes("(module (type $t (func)) (table 1 funcref) (func (param s32) (call_indirect (type $t) (local.get 0))))"),
            one(ErrorCode::SecretCondition));
}

// Every instruction applied to secret operands yields secret results;
// only declassify produces a public value from a secret one.
TEST(Validate, SecrecyConservation) {
  for (const OpInfo& info : all_opcodes()) {
    if (info.cls != OpClass::Unop && info.cls != OpClass::Binop && info.cls != OpClass::Testop &&
        info.cls != OpClass::Relop && info.cls != OpClass::Convert && info.cls != OpClass::Declassify)
      continue;
    auto nt = [](OpType t) {
      return t == OpType::I64 ? NumType::I64 : t == OpType::F32 ? NumType::F32 : t == OpType::F64 ? NumType::F64
                                                                                                  : NumType::I32;
    };
    NumType operand = info.cls == OpClass::Convert ? nt(info.src) : nt(info.type);
    if (info.cls == OpClass::Declassify) operand = nt(info.type);
    if (is_float(operand)) continue;
    int arity = info.cls == OpClass::Binop || info.cls == OpClass::Relop ? 2 : 1;
    Ctx ctx;
    ctx.trust = Trust::Trusted;
    FunctionChecker fc(ctx, 0);
    fc.mutable_state().frames.push_back(ControlFrame{Opcode::Block, std::nullopt, 0});
    for (int k = 0; k < arity; ++k) fc.mutable_state().stack.push_back(CtType::some(ValType(operand, Secrecy::Secret)));
    Instr ins{info.op};
    if (info.cls != OpClass::Declassify) ins.sec = Secrecy::Secret;
    fc.check(ins);
    if (!fc.errors().empty()) continue;  // rejected outright (unsafe, float side)
    ASSERT_EQ(fc.state().stack.size(), 1u) << info.name;
    const CtType& out = fc.state().stack.back();
    if (info.cls == OpClass::Declassify) {
      EXPECT_EQ(out.type.sec, Secrecy::Public);
    } else {
      EXPECT_TRUE(out.kind == CtType::Secret || (out.kind == CtType::Some && out.type.is_secret())) << info.name;
    }
  }
}

TEST(Validate, LinearAndDeterministic) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 200; ++n) {
    Module m = testing::random_module(rng);
    uint64_t count = 0;
    for (const Function& f : m.funcs) count += f.body.size();
    auto a = validate_module(m);
    auto b = validate_module(m);
    ASSERT_TRUE(a.ok());
    EXPECT_EQ(a.instructions_checked, count);
    ASSERT_EQ(a.errors.size(), b.errors.size());
  }
}

TEST(Validate, CorpusAcceptedUntrusted) {
  auto corpus = load_corpus(source_dir() / "corpus");
  ASSERT_EQ(corpus.size(), 3u);
  for (const CorpusEntry& e : corpus) {
    auto r = validate_module(e.module);
    EXPECT_TRUE(r.ok()) << e.name;
    EXPECT_TRUE(all_untrusted(e.module)) << e.name;
  }
}

TEST(Validate, NegativeSuite) {
  auto cases = load_negative(source_dir() / "corpus" / "negative");
  ASSERT_GE(cases.size(), 10u);
  for (const NegativeCase& c : cases) {
    auto r = validate_module(c.module);
    ASSERT_EQ(r.errors.size(), 1u) << c.file;
    EXPECT_EQ(r.errors[0].code, c.expected) << c.file;
  }
}

TEST(Validate, PlainWasmVerdicts) {
  std::ifstream in(source_dir() / "tests" / "data" / "superset" / "modules.json");
  auto modules = nlohmann::json::parse(in);
  int accepted = 0;
  for (const auto& j : modules) {
    Module m = parse_module(j.at("wat").get<std::string>());
    bool ok = validate_module(m).ok();
    EXPECT_EQ(ok, j.at("valid").get<bool>()) << j.at("name");
    accepted += ok;
  }
  EXPECT_GT(accepted, 300);
}

}  // namespace
}  // namespace ctwasm
