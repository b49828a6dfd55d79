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

// Text format. The WebAssembly s-expression syntax (folded and flat
// instructions, symbolic names, inline imports and exports, the legacy
// `get_local` style mnemonics) plus:
//
//   s32 s64                     secret value types
//   s32.add s64.load8_u ...     secret instructions; every integer type in the
//                               mnemonic is spelled with its secret prefix
//   select secret               select on a secret condition
//   s32.classify/i32            public to secret (shorthand s32.classify)
//   i32.declassify/s32          secret to public (shorthand i32.declassify)
//   (func $f trusted ...)       trusted function; `untrusted` is the default
//   (type (func trusted ...))   trusted function type
//   call_indirect trusted ...   trusted inline type use
//   (memory 1 secret)           secret memory; `public` is the default

#ifndef CTWASM_TEXT_H_
#define CTWASM_TEXT_H_

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctwasm/ast.h"

namespace ctwasm {

class ParseError : public std::runtime_error {
 public:
  ParseError(SourceSpan span, std::string message, std::vector<std::string> expected = {});

  const SourceSpan& span() const { return span_; }
  const std::string& message() const { return message_; }
  // Tokens that would have been accepted at the error position, if known.
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  SourceSpan span_;
  std::string message_;
  std::vector<std::string> expected_;
};

// Parses a module. The input may be a `(module ...)` form or a bare list of
// module fields.
Module parse_module(std::string_view text);

// Canonical text: numeric indices, flat instructions, hex float literals.
std::string print_module(const Module& m);

// Mnemonic of an instruction, with secret spelling applied.
std::string instr_name(const Instr& ins);

// Renders `file:line:col: message`.
std::string format_diagnostic(std::string_view file, const SourceSpan& span,
                              std::string_view message);

}  // namespace ctwasm

#endif  // CTWASM_TEXT_H_
