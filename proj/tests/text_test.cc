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

#include "ctwasm/binary.h"
#include "ctwasm/corpus.h"
#include "ctwasm/text.h"
#include "ctwasm/validate.h"
#include "support/gen.h"

namespace ctwasm {
namespace {

using testing::source_dir;

TEST(Text, SecretResult) {
  Module m = parse_module("(module (func (result s32) (s32.const 1)))");
  ASSERT_EQ(m.funcs.size(), 1u);
  const FuncType& ft = m.types[m.funcs[0].type_index];
  EXPECT_EQ(ft.trust, Trust::Untrusted);
  EXPECT_EQ(ft.results, std::vector<ValType>{kS32});
  EXPECT_EQ(m.funcs[0].body[0].op, Opcode::I32Const);
  EXPECT_EQ(m.funcs[0].body[0].sec, Secrecy::Secret);
}

TEST(Text, SecretMemory) {
  Module m = parse_module("(module (memory 1 secret))");
  ASSERT_EQ(m.memories.size(), 1u);
  EXPECT_EQ(m.memories[0].limits.min, 1u);
  EXPECT_EQ(m.memories[0].sec, Secrecy::Secret);
  EXPECT_EQ(parse_module("(module (memory 1))").memories[0].sec, Secrecy::Public);
  EXPECT_EQ(parse_module("(module (memory 1 public))").memories[0].sec, Secrecy::Public);
}

TEST(Text, TrustedDeclassifier) {
  Module m = parse_module("(module (func trusted (param s32) (result i32) get_local 0 i32.declassify))");
  const FuncType& ft = m.types[m.funcs[0].type_index];
  EXPECT_EQ(ft.trust, Trust::Trusted);
  EXPECT_EQ(ft.params, std::vector<ValType>{kS32});
  ASSERT_EQ(m.funcs[0].body.size(), 3u);
  EXPECT_EQ(m.funcs[0].body[0].op, Opcode::LocalGet);
  EXPECT_EQ(m.funcs[0].body[1].op, Opcode::I32DeclassifyS32);
  EXPECT_TRUE(validate_module(m).ok());
}

TEST(Text, SecretSpellings) {
  Module m = parse_module(R"((module (memory 1 secret)
    (func (param s64) (result s32)
      (s32.store8 offset=3 (i32.const 0) (s32.wrap_s64 (s64.shr_u (local.get 0) (s64.const 5))))
      (s32.load16_u (i32.const 2)))))");
  const Expr& b = m.funcs[0].body;
  EXPECT_EQ(b[3].op, Opcode::I64ShrU);
  EXPECT_EQ(b[3].sec, Secrecy::Secret);
  EXPECT_EQ(b[4].op, Opcode::I32WrapI64);
  EXPECT_EQ(b[4].sec, Secrecy::Secret);
  EXPECT_EQ(b[5].op, Opcode::I32Store8);
  EXPECT_EQ(b[5].mem.offset, 3u);
  EXPECT_TRUE(validate_module(m).ok());
}

TEST(Text, SelectSecretPrints) {
  Module m = parse_module("(module (func (param s32 s32 s32) (result s32) "
                          "(select secret (local.get 0) (local.get 1) (local.get 2))))");
  EXPECT_EQ(m.funcs[0].body[3].sec, Secrecy::Secret);
  std::string text = print_module(m);
  EXPECT_NE(text.find("select secret"), std::string::npos) << text;
  EXPECT_EQ(parse_module(text), m);
}

TEST(Text, PublicOnlyPrintsPlainWasm) {
  Module m = parse_module(R"((module (memory 1) (global (mut i64) (i64.const 3))
    (func (export "f") (param i32) (result i32) (i32.add (local.get 0) (i32.const 1)))))");
  std::string text = print_module(m);
  for (const char* kw : {"s32", "s64", "secret", "trusted", "classify"})
    EXPECT_EQ(text.find(kw), std::string::npos) << kw << " in\n" << text;
}

TEST(Text, LegacyMnemonics) {
  Module a = parse_module(R"((module (global (mut i32) (i32.const 0))
    (func (param i32) (result i64) get_local 0 set_global 0 get_global 0 i64.extend_u/i32)))");
  Module b = parse_module(R"((module (global (mut i32) (i32.const 0))
    (func (param i32) (result i64) local.get 0 global.set 0 global.get 0 i64.extend_i32_u)))");
  EXPECT_EQ(a, b);
}

TEST(Text, FoldedAndFlatAgree) {
  Module a = parse_module(R"((module (func (param i32) (result i32)
    (if (result i32) (local.get 0) (then (i32.const 1)) (else (i32.const 2))))))");
  Module b = parse_module(R"((module (func (param i32) (result i32)
    local.get 0 if (result i32) i32.const 1 else i32.const 2 end)))");
  EXPECT_EQ(a, b);
}

TEST(Text, ParseErrorsCarrySpans) {
  try {
    parse_module("(module\n  (func (result s33)))");
    FAIL() << "accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.span().line, 2u);
    EXPECT_EQ(e.span().column, 17u);
    EXPECT_LE(e.span().start, e.span().end);
    EXPECT_FALSE(e.expected().empty());
    EXPECT_EQ(format_diagnostic("f.cwat", e.span(), e.message()).rfind("f.cwat:2:17: ", 0), 0u);
  }
  EXPECT_THROW(parse_module("(module (func $f) (func $f))"), ParseError);
  EXPECT_THROW(parse_module("(module (func (local.get $nope)))"), ParseError);
  EXPECT_THROW(parse_module("(module (func"), ParseError);
  EXPECT_THROW(parse_module("(module (func (i32.bogus)))"), ParseError);
}

TEST(Text, SpansAttachToInstructions) {
  Module m = parse_module("(module\n (func\n  (drop\n   (i32.const 7))))");
  const auto& spans = m.funcs[0].debug.spans;
  ASSERT_EQ(spans.size(), m.funcs[0].body.size());
  EXPECT_EQ(spans[0].line, 4u);  // i32.const
  EXPECT_EQ(spans[1].line, 3u);  // drop
}

TEST(Text, RoundTripRandomModules) {
  std::mt19937_64 rng(3);
  for (int n = 0; n < 1000; ++n) {
    Module m = testing::random_module(rng);
    std::string text = print_module(m);
    Module back;
    ASSERT_NO_THROW(back = parse_module(text)) << text;
    ASSERT_EQ(back, m) << text;
    ASSERT_EQ(print_module(back), text);
  }
}

TEST(Text, CorpusCanonicalizationIsStable) {
  for (const CorpusEntry& e : load_corpus(source_dir() / "corpus")) {
    std::string once = print_module(e.module);
    std::string twice = print_module(parse_module(once));
    EXPECT_EQ(once, twice) << e.name;
    EXPECT_EQ(parse_module(once), e.module) << e.name;
  }
}

}  // namespace
}  // namespace ctwasm
