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

#include "ctwasm/binary.h"
#include "ctwasm/corpus.h"
#include "ctwasm/strip.h"
#include "ctwasm/text.h"
#include "support/gen.h"

namespace ctwasm {
namespace {

using testing::source_dir;

std::vector<std::string> warning_codes(const StripReport& r) {
  std::vector<std::string> out;
  for (const StripWarning& w : r.warnings) out.push_back(w.code);
  return out;
}

TEST(Strip, SecretAddBecomesAdd) {
  Module m = parse_module("(module (func (param s32 s32) (result s32) (s32.add (local.get 0) (local.get 1))))");
  StripReport r = strip_module(m);
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_EQ(r.module.funcs[0].body[2].op, Opcode::I32Add);
  EXPECT_EQ(r.module.funcs[0].body[2].sec, Secrecy::Public);
  EXPECT_EQ(r.module.types[r.module.funcs[0].type_index], (FuncType{Trust::Untrusted, {kI32, kI32}, {kI32}}));
  EXPECT_EQ(print_module(r.module), print_module(parse_module(
                                        "(module (func (param i32 i32) (result i32) (i32.add (local.get 0) (local.get 1))))")));
}

TEST(Strip, CoercionsDisappear) {
  Module m = parse_module(R"((module (memory 1 secret)
    (func trusted (param i32) (result i64)
      (s32.store (i32.const 0) (s32.classify (local.get 0)))
      (i64.declassify (s64.extend_s32_u (s32.load (i32.const 0)))))))");
  StripReport r = strip_module(m);
  EXPECT_TRUE(ct_constructs(r.module).empty());
  EXPECT_EQ(r.module.memories[0].sec, Secrecy::Public);
  for (const Instr& ins : r.module.funcs[0].body) {
    EXPECT_NE(op_info(ins.op).cls, OpClass::Classify);
    EXPECT_NE(op_info(ins.op).cls, OpClass::Declassify);
  }
  EXPECT_TRUE(validate_module(r.module).ok());
}

TEST(Strip, Warnings) {
  Module imp = parse_module("(module (import \"env\" \"h\" (func (param s32))) (func (call 0 (s32.const 1))))");
  EXPECT_EQ(warning_codes(strip_module(imp)), std::vector<std::string>{"W-IMPORT"});
  Module timp = parse_module("(module (import \"env\" \"h\" (func trusted)))");
  EXPECT_TRUE(strip_module(timp).warnings.empty());
  Module ind = parse_module("(module (type $t (func)) (table 1 funcref) (func (call_indirect (type $t) (i32.const 0))))");
  StripReport ri = strip_module(ind);
  ASSERT_EQ(warning_codes(ri), std::vector<std::string>{"W-INDIRECT"});
  EXPECT_EQ(ri.warnings[0].func, std::optional<uint32_t>(0));
  EXPECT_EQ(ri.warnings[0].offset, std::optional<uint32_t>(1));

  Module exp = parse_module(R"((module (memory (export "m") 1 secret)
    (func (export "f") (param s32))
    (func (export "g") (param i32))))");
  EXPECT_TRUE(strip_module(exp).warnings.empty());
  auto codes = warning_codes(strip_module(exp, true));
  std::sort(codes.begin(), codes.end());
  EXPECT_EQ(codes, (std::vector<std::string>{"W-EXPORT-SECRET-MEM", "W-EXPORT-SECRET-SIG"}));
}

TEST(Strip, RefusesInvalidInput) {
  for (const NegativeCase& c : load_negative(source_dir() / "corpus" / "negative")) {
    try {
      strip_module(c.module);
      ADD_FAILURE() << c.file;
    } catch (const RefuseUnvalidated& e) {
      ASSERT_EQ(e.errors().size(), 1u);
      EXPECT_EQ(e.errors()[0].code, c.expected);
    }
  }
}

// select secret under the interpreter against the mask sequence.
TEST(Strip, SelectSequenceMatchesInterpreter) {
  for (NumType w : {NumType::I32, NumType::I64}) {
    bool wide = w == NumType::I64;
    auto seq = secret_select_sequence(w, 3, 4);
    for (const Instr& ins : seq) {
      OpClass cls = op_info(ins.op).cls;
      EXPECT_NE(ins.op, Opcode::Select);
      EXPECT_NE(cls, OpClass::Control) << op_info(ins.op).name;
    }
    Module plain;
    plain.types.push_back(FuncType{Trust::Untrusted, {ValType(w), ValType(w), kI32}, {ValType(w)}});
    Function f;
    f.locals = {kI32, ValType(w)};
    f.body = {Instr{Opcode::LocalGet, {}, {}, 0}, Instr{Opcode::LocalGet, {}, {}, 1},
              Instr{Opcode::LocalGet, {}, {}, 2}};
    f.body.insert(f.body.end(), seq.begin(), seq.end());
    f.body.push_back(Instr{Opcode::End});
    plain.funcs.push_back(f);
    plain.exports.push_back(Export{"f", ExternKind::Func, 0});
    ASSERT_TRUE(validate_module(plain).ok()) << print_module(plain);
    ASSERT_TRUE(ct_constructs(plain).empty());

    ValType s = ValType(w, Secrecy::Secret);
    std::string t = wide ? "s64" : "s32";
    Module ct = parse_module("(module (func (export \"f\") (param " + t + " " + t + " s32) (result " + t +
                             ") (select secret (local.get 0) (local.get 1) (local.get 2))))");
    Store sp, sc;
    uint32_t ip = instantiate(sp, plain), ic = instantiate(sc, ct);
    std::mt19937_64 rng(wide ? 64 : 32);
    for (uint32_t cond : {0u, 1u, 2u, 0xFFFFFFFFu}) {
      for (int k = 0; k < 1000; ++k) {
        uint64_t v1 = wide ? rng() : rng() & 0xFFFFFFFF, v2 = wide ? rng() : rng() & 0xFFFFFFFF;
        auto a = invoke(sp, ip, "f", {Value{ValType(w), v1}, Value{ValType(w), v2}, Value::i32(cond)}, 100, false);
        auto b = invoke(sc, ic, "f", {Value{s, v1}, Value{s, v2}, Value::s32(cond)}, 100, false);
        ASSERT_EQ(a.results.at(0).bits, b.results.at(0).bits);
        ASSERT_EQ(a.results[0].bits, cond ? v1 : v2);
      }
    }
  }
}

TEST(Strip, SelectExamples) {
  Module m = parse_module("(module (func (export \"f\") (param s32 s32 s32) (result s32) "
                          "(select secret (local.get 0) (local.get 1) (local.get 2))))");
  StripReport r = strip_module(m);
  Store s;
  uint32_t i = instantiate(s, r.module);
  EXPECT_EQ(invoke(s, i, "f", {Value::i32(7), Value::i32(9), Value::i32(0)}, 100).results,
            std::vector<Value>{Value::i32(9)});
  EXPECT_EQ(invoke(s, i, "f", {Value::i32(7), Value::i32(9), Value::i32(5)}, 100).results,
            std::vector<Value>{Value::i32(7)});
}

TEST(Strip, FreshLocalsAreShared) {
  Module m = parse_module(R"((module
    (func (param s32 s64 s32) (result s64)
      (drop (select secret (local.get 0) (local.get 0) (local.get 2)))
      (drop (select secret (local.get 0) (local.get 0) (local.get 2)))
      (drop (select secret (local.get 1) (local.get 1) (local.get 2)))
      (select secret (local.get 1) (local.get 1) (local.get 2)))
    (func (param i32) (result i32) (select (local.get 0) (local.get 0) (local.get 0)))))");
  StripReport r = strip_module(m);
  EXPECT_EQ(r.module.funcs[0].locals, (std::vector<ValType>{kI32, kI32, kI64}));
  EXPECT_TRUE(r.module.funcs[1].locals.empty());
  EXPECT_TRUE(validate_module(r.module).ok());
}

TEST(Strip, CorpusIsClean) {
  std::ifstream in(source_dir() / "tests" / "data" / "stripped_oracle.json");
  auto oracle = nlohmann::json::parse(in);
  for (const CorpusEntry& e : load_corpus(source_dir() / "corpus")) {
    StripReport r = strip_module(e.module);
    EXPECT_TRUE(r.warnings.empty()) << e.name;
    EXPECT_TRUE(ct_constructs(r.module).empty()) << e.name;
    EXPECT_TRUE(validate_module(r.module).ok());
    std::vector<uint8_t> bytes = encode_module(r.module);
    EXPECT_EQ(r.output_bytes, bytes.size());
    EXPECT_EQ(r.input_bytes, encode_module(e.module).size());
    double ratio = static_cast<double>(r.input_bytes) / r.output_bytes;
    EXPECT_GE(ratio, 1.0) << e.name;
    EXPECT_LE(ratio, 1.5) << e.name;
    // Bytes accepted by independent base-Wasm decoders when the oracle was frozen.
    const auto& o = oracle.at(e.name);
    EXPECT_EQ(to_hex(bytes), o.at("wasm").get<std::string>()) << e.name;
    EXPECT_TRUE(o.at("wasmtime").get<bool>());
    EXPECT_TRUE(o.at("wabt").get<bool>());
    // And by our own decoder, as plain Wasm.
    Module back = decode_module(bytes);
    EXPECT_TRUE(ct_constructs(back).empty());
  }
}

TEST(Strip, CorpusEquivalence) {
  std::mt19937_64 rng(100);
  for (const CorpusEntry& e : load_corpus(source_dir() / "corpus")) {
    StripReport r = strip_module(e.module);
    for (int i = 0; i < 100; ++i) {
      RandomInput in = random_input(e.module, e.secrets, rng);
      ASSERT_EQ(compare_runs(e.module, r.module, e.secrets.export_name, in), "") << e.name << " input " << i;
    }
  }
}

std::vector<Value> publicize(std::vector<Value> vs) {
  for (Value& v : vs) v.type.sec = Secrecy::Public;
  return vs;
}

// Encoded length of the 64-bit mask sequence minus the two bytes of
// `select secret`.
size_t select_growth() {
  Module m;
  m.types.push_back(FuncType{});
  Function f;
  f.body = secret_select_sequence(NumType::I64, 0, 1);
  f.body.push_back(Instr{Opcode::End});
  m.funcs.push_back(f);
  Module empty;
  empty.types.push_back(FuncType{});
  empty.funcs.push_back(Function{0, {}, {Instr{Opcode::End}}});
  return encode_module(m).size() - encode_module(empty).size() - 2;
}

const size_t kSelectGrowth = select_growth();

TEST(Strip, RandomModuleEquivalence) {
  std::mt19937_64 rng(31);
  for (int n = 0; n < 500; ++n) {
    testing::GenOptions opts;
    opts.imports = false;
    Module m = testing::random_module(rng, opts);
    StripReport r = strip_module(m);
    ASSERT_TRUE(ct_constructs(r.module).empty());
    ASSERT_TRUE(validate_module(r.module).ok()) << print_module(m);
    // Erasure only removes bytes; each secret select grows by its mask
    // sequence, plus one pair of local declarations per function.
    size_t selects = 0, with_select = 0;
    for (const Function& f : m.funcs) {
      size_t k = std::count_if(f.body.begin(), f.body.end(),
                               [](const Instr& i) { return i.op == Opcode::Select && i.sec == Secrecy::Secret; });
      selects += k;
      with_select += k > 0;
    }
    if (selects == 0)
      ASSERT_GE(r.input_bytes, r.output_bytes);
    else
      ASSERT_LE(r.output_bytes, r.input_bytes + selects * kSelectGrowth + with_select * 4);
    // Idempotent on its own output.
    StripReport again = strip_module(r.module);
    ASSERT_EQ(again.module, r.module);
    ASSERT_TRUE(again.warnings.size() <= r.warnings.size());
    for (const Export& e : m.exports) {
      if (e.kind != ExternKind::Func) continue;
      std::vector<Value> args = testing::random_args(m.func_type(e.index), rng);
      Store s1, s2;
      uint32_t i1 = instantiate(s1, m), i2 = instantiate(s2, r.module);
      auto a = invoke(s1, i1, e.name, args, 5000, false);
      auto b = invoke(s2, i2, e.name, publicize(args), 5000, false);
      if (a.status == Status::FuelExhausted) continue;  // extra select code burns fuel
      ASSERT_EQ(a.status, b.status) << print_module(m);
      ASSERT_EQ(a.trap, b.trap);
      ASSERT_EQ(publicize(a.results), b.results) << print_module(m);
      for (size_t k = 0; k < s1.mems.size(); ++k) ASSERT_EQ(s1.mems[k].bytes, s2.mems[k].bytes);
    }
  }
}

TEST(Strip, PublicModulesUnchanged) {
  std::ifstream in(source_dir() / "tests" / "data" / "superset" / "modules.json");
  auto modules = nlohmann::json::parse(in);
  for (const auto& j : modules) {
    if (!j.at("valid").get<bool>()) continue;
    Module m = parse_module(j.at("wat").get<std::string>());
    StripReport r = strip_module(m);
    EXPECT_EQ(to_hex(encode_module(r.module)), j.at("wasm").get<std::string>()) << j.at("name");
  }
}

}  // namespace
}  // namespace ctwasm
