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
#include <set>
#include <sstream>

#include "ctwasm/ast.h"
#include "ctwasm/text.h"
#include "ctwasm/validate.h"
#include "support/gen.h"

namespace ctwasm {
namespace {

TEST(Ast, FloatsArePublic) {
  EXPECT_EQ(sec_of(kS32), Secrecy::Secret);
  EXPECT_EQ(sec_of(kI64), Secrecy::Public);
  EXPECT_EQ(typed(NumType::F32, Secrecy::Secret), kF32);
  EXPECT_EQ(typed(NumType::I64, Secrecy::Secret), kS64);
  EXPECT_TRUE(well_formed(kS64));
  EXPECT_FALSE(well_formed(ValType(NumType::F64, Secrecy::Secret)));
}

TEST(Ast, TrustOrder) {
  EXPECT_TRUE(trust_geq(Trust::Trusted, Trust::Untrusted));
  EXPECT_TRUE(trust_geq(Trust::Trusted, Trust::Trusted));
  EXPECT_TRUE(trust_geq(Trust::Untrusted, Trust::Untrusted));
  EXPECT_FALSE(trust_geq(Trust::Untrusted, Trust::Trusted));
}

TEST(Ast, TrustIsAPartialOrder) {
  const Trust all[] = {Trust::Untrusted, Trust::Trusted};
  for (Trust a : all) {
    EXPECT_TRUE(trust_geq(a, a));
    for (Trust b : all) {
      if (trust_geq(a, b) && trust_geq(b, a)) EXPECT_EQ(a, b);
      for (Trust c : all)
        if (trust_geq(a, b) && trust_geq(b, c)) EXPECT_TRUE(trust_geq(a, c));
      EXPECT_TRUE(trust_geq(Trust::Trusted, b));
    }
  }
}

TEST(Ast, Coercions) {
  for (ValType t : {kI32, kI64}) EXPECT_EQ(sec_of(classify_result(t)), Secrecy::Secret);
  EXPECT_EQ(classify_result(kI32), kS32);
  EXPECT_EQ(classify_result(kI64), kS64);
  EXPECT_EQ(declassify_result(kS32), kI32);
  EXPECT_THROW(classify_result(kF32), std::invalid_argument);
  EXPECT_THROW(classify_result(kS32), std::invalid_argument);
  EXPECT_THROW(declassify_result(kI64), std::invalid_argument);
}

TEST(Ast, Names) {
  EXPECT_EQ(to_string(kS32), "s32");
  EXPECT_EQ(to_string(kF64), "f64");
  EXPECT_EQ(to_string(Trust::Trusted), "trusted");
}

TEST(Ast, PublicOnly) {
  EXPECT_TRUE(is_public_only(parse_module("(module (func (param i32) (result i32) (local.get 0)))")));
  EXPECT_FALSE(is_public_only(parse_module("(module (func (param s32)))")));
  EXPECT_FALSE(is_public_only(parse_module("(module (memory 1 secret))")));
  EXPECT_FALSE(is_public_only(parse_module("(module (func trusted))")));
  EXPECT_FALSE(is_public_only(parse_module("(module (func (i32.const 1) (drop (s32.classify))))")));
}

// The instruction set is exactly the checked-in list: every entry resolves
// to one opcode with that code, and nothing else exists.
TEST(Ast, InstructionCoverage) {
  std::ifstream in(testing::source_dir() / "tests" / "data" / "opcodes.txt");
  ASSERT_TRUE(in);
  std::string line;
  std::set<uint16_t> listed;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string code, name;
    ls >> code >> name;
    const OpInfo* info = op_info_by_name(name);
    ASSERT_NE(info, nullptr) << name;
    EXPECT_EQ(static_cast<uint16_t>(info->op), std::stoul(code, nullptr, 16)) << name;
    EXPECT_TRUE(listed.insert(static_cast<uint16_t>(info->op)).second) << name;
  }
  EXPECT_EQ(listed.size(), all_opcodes().size());
  EXPECT_EQ(listed.size(), 172u + 4u);  // MVP plus the four coercions
  for (const OpInfo& i : all_opcodes()) EXPECT_TRUE(listed.count(static_cast<uint16_t>(i.op))) << i.name;
}

// Pure float operations have no secret form at all. Conversions between
// integers and floats have an encoding but every secret use is rejected.
TEST(Ast, SecretForms) {
  auto is_f = [](OpType t) { return t == OpType::F32 || t == OpType::F64; };
  for (const OpInfo& i : all_opcodes()) {
    if (is_f(i.type) && (i.src == OpType::None || is_f(i.src))) EXPECT_FALSE(i.secret_capable) << i.name;
    if (i.cls != OpClass::Convert || !i.secret_capable) continue;
    if (!is_f(i.type) && !is_f(i.src)) continue;
    Instr ins{i.op};
    ins.sec = Secrecy::Secret;
    std::string src = i.src == OpType::I32 ? "s32" : i.src == OpType::I64 ? "s64" : i.src == OpType::F32 ? "f32" : "f64";
    Module m = parse_module("(module (func (param " + src + ") (local.get 0) (" + instr_name(ins) + ") (drop)))");
    auto r = validate_module(m);
    ASSERT_EQ(r.errors.size(), 1u) << i.name;
    EXPECT_EQ(r.errors[0].code, ErrorCode::FloatSecrecy) << i.name;
  }
  EXPECT_TRUE(op_info(Opcode::I32Add).secret_capable);
  EXPECT_TRUE(op_info(Opcode::I64ExtendI32U).secret_capable);
  EXPECT_TRUE(op_info(Opcode::I32DivU).unsafe);
}

TEST(Ast, IndexSpaces) {
  Module m = parse_module(R"((module
    (import "env" "f" (func $f (param i32)))
    (import "env" "g" (global $g i32))
    (func $h (export "h") (result s64) (s64.const 1))))");
  EXPECT_EQ(m.num_funcs(), 2u);
  EXPECT_EQ(m.num_globals(), 1u);
  EXPECT_FALSE(m.defined_func(0).has_value());
  EXPECT_EQ(m.defined_func(1), 0u);
  EXPECT_EQ(m.func_type(1).results.at(0), kS64);
  ASSERT_NE(m.find_export("h"), nullptr);
  EXPECT_EQ(m.find_export("h")->index, 1u);
  EXPECT_EQ(m.find_export("nope"), nullptr);
}

}  // namespace
}  // namespace ctwasm
