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

uint64_t read_uleb(const std::vector<uint8_t>& b, size_t& i) {
  uint64_t v = 0;
  for (int shift = 0;; shift += 7) {
    uint8_t x = b.at(i++);
    v |= uint64_t(x & 0x7f) << shift;
    if (x < 0x80) return v;
  }
}

// Bytes of the first function body, after its (empty) local declarations.
std::vector<uint8_t> body_bytes(const Module& m) {
  std::vector<uint8_t> b = encode_module(m);
  size_t i = 8;
  while (i < b.size()) {
    uint8_t id = b[i++];
    uint64_t size = read_uleb(b, i);
    if (id == 10) {
      read_uleb(b, i);  // function count
      uint64_t body = read_uleb(b, i);
      size_t start = i;
      EXPECT_EQ(read_uleb(b, i), 0u) << "expected no locals";
      return std::vector<uint8_t>(b.begin() + i, b.begin() + start + body);
    }
    i += size;
  }
  return {};
}

std::vector<uint8_t> body_bytes(const std::string& wat) { return body_bytes(parse_module(wat)); }

TEST(Binary, SecretAddIsPrefixed) {
  auto b = body_bytes("(module (func (param s32 s32) (result s32) (s32.add (local.get 0) (local.get 1))))");
  std::vector<uint8_t> want = {0x20, 0x00, 0x20, 0x01, 0xFE, 0x6A, 0x0B};
  EXPECT_EQ(b, want);
}

TEST(Binary, CoercionAndSelectEncodings) {
  auto b = body_bytes("(module (func trusted (param i32 s32) (result i32) "
                      "(i32.declassify (select secret (s32.classify (local.get 0)) (local.get 1) (local.get 1)))))");
  std::vector<uint8_t> want = {0x20, 0x00, 0xFE, 0xC0, 0x20, 0x01, 0x20, 0x01, 0xFE, 0x1B, 0xFE, 0xC2, 0x0B};
  EXPECT_EQ(b, want);
  auto c = body_bytes("(module (func (param i64) (result s64) (s64.classify (local.get 0))))");
  EXPECT_EQ(c[2], 0xFE);
  EXPECT_EQ(c[3], 0xC1);
}

TEST(Binary, TypeAndMemoryCodes) {
  auto b = encode_module(parse_module("(module (type (func trusted (param s32 s64 i32))) (memory 1 2 secret))"));
  std::vector<uint8_t> want = {0x00, 0x61, 0x73, 0x6D, 0x01, 0x00, 0x00, 0x00,
                               0x01, 0x07, 0x01, 0x5F, 0x03, 0x6F, 0x6E, 0x7F, 0x00,
                               0x05, 0x04, 0x01, 0x05, 0x01, 0x02};
  EXPECT_EQ(b, want);
}

TEST(Binary, CallIndirectCarriesTrust) {
  auto b = body_bytes("(module (type $t (func trusted)) (table 1 funcref) "
                      "(func trusted (call_indirect (type $t) (i32.const 0))))");
  std::vector<uint8_t> want = {0x41, 0x00, 0x11, 0x00, 0x01, 0x0B};
  EXPECT_EQ(b, want);
  auto u = body_bytes("(module (type $t (func)) (table 1 funcref) (func (call_indirect (type $t) (i32.const 0))))");
  std::vector<uint8_t> plain = {0x41, 0x00, 0x11, 0x00, 0x00, 0x0B};
  EXPECT_EQ(u, plain);
}

TEST(Binary, EmptyModule) {
  std::vector<uint8_t> header = {0x00, 0x61, 0x73, 0x6D, 0x01, 0x00, 0x00, 0x00};
  EXPECT_EQ(decode_module(header), Module{});
  EXPECT_EQ(encode_module(Module{}), header);
}

DecodeErrorCode decode_error(const std::vector<uint8_t>& bytes, size_t* offset = nullptr) {
  try {
    decode_module(bytes);
  } catch (const DecodeError& e) {
    if (offset) *offset = e.offset();
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return DecodeErrorCode::BadMagic;
}

std::vector<uint8_t> with_body(std::vector<uint8_t> body) {
  std::vector<uint8_t> b = {0x00, 0x61, 0x73, 0x6D, 0x01, 0x00, 0x00, 0x00, 0x01, 0x04, 0x01, 0x60, 0x00, 0x00,
                            0x03, 0x02, 0x01, 0x00};
  std::vector<uint8_t> code = {0x01, static_cast<uint8_t>(body.size() + 1), 0x00};
  code.insert(code.end(), body.begin(), body.end());
  b.push_back(0x0A);
  b.push_back(static_cast<uint8_t>(code.size()));
  b.insert(b.end(), code.begin(), code.end());
  return b;
}

TEST(Binary, UnknownSecretOpcode) {
  std::vector<uint8_t> b = with_body({0xFE, 0xFF, 0x0B});
  size_t off = 0;
  EXPECT_EQ(decode_error(b, &off), DecodeErrorCode::UnknownSecretOpcode);
  EXPECT_EQ(off, b.size() - 2);  // the payload byte
  // Float operations have no secret form.
  EXPECT_EQ(decode_error(with_body({0xFE, 0x92, 0x0B})), DecodeErrorCode::UnknownSecretOpcode);
}

TEST(Binary, DecodeErrors) {
  EXPECT_EQ(decode_error({0x00, 0x61, 0x73}), DecodeErrorCode::BadMagic);
  EXPECT_EQ(decode_error({0x00, 0x61, 0x73, 0x6E, 0x01, 0, 0, 0}), DecodeErrorCode::BadMagic);
  EXPECT_EQ(decode_error({0x00, 0x61, 0x73, 0x6D, 0x02, 0, 0, 0}), DecodeErrorCode::BadVersion);
  EXPECT_EQ(decode_error(with_body({0xFF, 0x0B})), DecodeErrorCode::UnknownOpcode);
  std::vector<uint8_t> truncated = with_body({0x01, 0x0B});
  truncated.pop_back();
  EXPECT_EQ(decode_error(truncated), DecodeErrorCode::UnexpectedEnd);
  // Function section after code section.
  std::vector<uint8_t> order = with_body({0x0B});
  order.insert(order.end(), {0x03, 0x01, 0x00});
  EXPECT_EQ(decode_error(order), DecodeErrorCode::SectionOrder);
  EXPECT_EQ(decode_error({0x00, 0x61, 0x73, 0x6D, 0x01, 0, 0, 0, 0x0C, 0x01, 0x00}),
            DecodeErrorCode::UnknownSection);
  EXPECT_EQ(decode_error({0x00, 0x61, 0x73, 0x6D, 0x01, 0, 0, 0, 0x01, 0x02, 0x01, 0x61}),
            DecodeErrorCode::UnknownTypeForm);
}

TEST(Binary, Leb128) {
  std::vector<uint8_t> out;
  write_uleb(out, 624485);
  EXPECT_EQ(out, (std::vector<uint8_t>{0xE5, 0x8E, 0x26}));
  out.clear();
  write_sleb(out, -123456);
  EXPECT_EQ(out, (std::vector<uint8_t>{0xC0, 0xBB, 0x78}));
  out.clear();
  write_sleb(out, 64);
  EXPECT_EQ(out, (std::vector<uint8_t>{0xC0, 0x00}));
}

// Every secret instruction takes two opcode bytes, every public one a single
// byte equal to its MVP opcode.
TEST(Binary, PrefixDiscipline) {
  std::mt19937_64 rng(11);
  int secret = 0, pub = 0;
  for (int n = 0; n < 200; ++n) {
    Module m = testing::random_module(rng);
    for (const Function& f : m.funcs) {
      for (const Instr& ins : f.body) {
        if (ins.op == Opcode::End || ins.op == Opcode::Else) continue;
        Module one;
        one.types.push_back(FuncType{});
        Function g;
        g.body = {ins};
        if (ins.op == Opcode::Block || ins.op == Opcode::Loop || ins.op == Opcode::If)
          g.body.push_back(Instr{Opcode::End});
        g.body.push_back(Instr{Opcode::End});
        one.funcs.push_back(g);
        std::vector<uint8_t> b = body_bytes(one);
        const OpInfo& info = op_info(ins.op);
        bool two = info.cls == OpClass::Classify || info.cls == OpClass::Declassify || ins.sec == Secrecy::Secret;
        if (two) {
          ++secret;
          ASSERT_EQ(b.at(0), kSecretPrefix) << instr_name(ins);
          EXPECT_EQ(b.at(1), static_cast<uint16_t>(ins.op) & 0xff) << instr_name(ins);
        } else {
          ++pub;
          ASSERT_EQ(b.at(0), static_cast<uint16_t>(ins.op)) << instr_name(ins);
        }
      }
    }
  }
  EXPECT_GT(secret, 100);
  EXPECT_GT(pub, 100);
}

TEST(Binary, RoundTripRandomModules) {
  std::mt19937_64 rng(1);
  for (int n = 0; n < 1000; ++n) {
    Module m = testing::random_module(rng);
    ASSERT_TRUE(validate_module(m).ok()) << print_module(m);
    std::vector<uint8_t> bytes = encode_module(m);
    Module back = decode_module(bytes);
    ASSERT_EQ(back, m) << print_module(m);
    ASSERT_EQ(encode_module(back), bytes);
  }
}

TEST(Binary, PublicOnlyModulesUseNoExtensions) {
  std::mt19937_64 rng(2);
  testing::GenOptions o;
  o.secrets = false;
  o.trusted = false;
  for (int n = 0; n < 300; ++n) {
    Module m = testing::random_module(rng, o);
    ASSERT_TRUE(is_public_only(m));
    std::vector<uint8_t> b = encode_module(m);
    // No s32/s64 codes in type positions, no trusted forms, no prefix in code.
    Module back = decode_module(b);
    EXPECT_TRUE(is_public_only(back));
  }
}

TEST(Binary, CorpusTextRoundTrip) {
  for (const CorpusEntry& e : load_corpus(source_dir() / "corpus")) {
    std::vector<uint8_t> bytes = encode_module(e.module);
    Module decoded = decode_module(bytes);
    Module reparsed = parse_module(print_module(decoded));
    EXPECT_EQ(encode_module(reparsed), bytes) << e.name;
  }
}

}  // namespace
}  // namespace ctwasm
