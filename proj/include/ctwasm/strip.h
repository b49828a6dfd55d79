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

// Erasure of CT-Wasm annotations, producing plain WebAssembly.

#ifndef CTWASM_STRIP_H_
#define CTWASM_STRIP_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctwasm/ast.h"
#include "ctwasm/validate.h"

namespace ctwasm {

struct StripWarning {
  std::string code;  // W-IMPORT, W-INDIRECT, W-EXPORT-SECRET-MEM, W-EXPORT-SECRET-SIG
  std::optional<uint32_t> func;
  std::optional<uint32_t> offset;
  std::string message;
};

struct StripReport {
  Module module;
  std::vector<StripWarning> warnings;
  size_t input_bytes = 0;
  size_t output_bytes = 0;
};

// Thrown when the input does not validate.
class RefuseUnvalidated : public std::runtime_error {
 public:
  explicit RefuseUnvalidated(std::vector<ValidationError> errors);
  const std::vector<ValidationError>& errors() const { return errors_; }

 private:
  std::vector<ValidationError> errors_;
};

StripReport strip_module(const Module& m, bool paranoid = false);

// Removes every annotation without checking the input: secret types become
// public, trust and coercions disappear, and `select secret` becomes a plain
// select. The result is what an annotation-free author would have written.
Module erase_annotations(const Module& m);

// The branch-free replacement for `select secret` on a stack of
// [v1, v2, cond]. `cond_local` is an i32 local and `value_local` a local of
// the operand width.
std::vector<Instr> secret_select_sequence(NumType width, uint32_t cond_local, uint32_t value_local);

// Instructions or declarations that exist only in CT-Wasm, described for
// diagnostics. Empty for plain WebAssembly.
std::vector<std::string> ct_constructs(const Module& m);

}  // namespace ctwasm

#endif  // CTWASM_STRIP_H_
