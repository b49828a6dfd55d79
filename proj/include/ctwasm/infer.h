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

// Secrecy label inference for plain WebAssembly.
//
// Every integer slot (parameter, local, result, global, block result and
// operand stack value) starts Secret. Public sinks (branch conditions,
// addresses, division operands, float conversions, imports) demote the slots
// feeding them, backwards along data flow, until a fixpoint. Where a public
// value then feeds a secret slot a classify is inserted. Nothing is ever
// declassified: a sink reached from a value that must stay secret is reported
// as a conflict.

#ifndef CTWASM_INFER_H_
#define CTWASM_INFER_H_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctwasm/ast.h"
#include "ctwasm/validate.h"

namespace ctwasm {

// Hints file:
//   {
//     "memory": "public",
//     "exports": {"stream_xor": {"params": {"8": "public", "$len": "public"},
//                                "result": "public"}},
//     "trusted": ["helper", "3"]
//   }
// Export parameters are named by index or by `$name`. Functions in "trusted"
// are named by export name, `$name` or index. Hints may only make things
// public or trusted.
struct ExportHint {
  std::map<std::string, Secrecy> params;
  std::optional<Secrecy> result;
};

struct Hints {
  std::optional<Secrecy> memory;
  std::map<std::string, ExportHint> exports;
  std::vector<std::string> trusted;
};

class HintsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Hints parse_hints(std::string_view json);

class InputInvalid : public std::runtime_error {
 public:
  InputInvalid(const std::string& what, std::vector<ValidationError> errors)
      : std::runtime_error(what), errors_(std::move(errors)) {}
  const std::vector<ValidationError>& errors() const { return errors_; }

 private:
  std::vector<ValidationError> errors_;
};

struct Conflict {
  std::optional<uint32_t> func;    // where the secret value originates
  std::optional<uint32_t> offset;
  std::vector<std::string> chain;  // from the secret source to the public sink
  std::string message;
  std::string suggestion;
};

struct InferStats {
  uint32_t slots = 0;       // labelable integer slots
  uint32_t iterations = 0;  // propagation rounds until the fixpoint
  uint32_t demotions = 0;   // slots that ended up public
  uint32_t classify_inserted = 0;
};

struct InferResult {
  std::optional<Module> module;  // set when there are no conflicts
  std::vector<Conflict> conflicts;
  InferStats stats;
  bool ok() const { return module.has_value(); }
};

// Throws InputInvalid if the annotation-free input does not validate and
// HintsError for hints that name nothing.
InferResult infer_labels(const Module& m, const Hints& hints = {});

// The labeling problem behind infer_labels, exposed so a labeling can be
// checked independently. Slots marked fixed are not free to choose.
class LabelProblem {
 public:
  enum class Fixed : uint8_t { Free, Public, Secret };
  struct Slot {
    std::string description;
    Fixed fixed = Fixed::Free;
    std::optional<uint32_t> func;
    std::optional<uint32_t> offset;
  };

  static LabelProblem build(const Module& m, const Hints& hints = {});

  const std::vector<Slot>& slots() const { return slots_; }
  // Module annotated according to `labels` (one per slot), with classify
  // inserted where a public producer feeds a secret slot. The result may fail
  // validation if the labeling is not admissible.
  Module emit(const std::vector<Secrecy>& labels, uint32_t* classify_count = nullptr) const;

  // Greatest admissible labeling by backward demotion, with conflicts.
  struct Solution {
    std::vector<Secrecy> labels;
    std::vector<Conflict> conflicts;
    uint32_t iterations = 0;
  };
  Solution solve() const;

 private:
  friend class ProblemBuilder;

  // How the value produced at an instruction gets its type.
  struct Producer {
    enum Kind : uint8_t { None, Flexible, FromSlot, Public, Secret } kind = None;
    int slot = -1;  // FromSlot
    NumType type = NumType::I32;
  };
  struct FuncLabels {
    std::vector<int> locals;  // params then locals; -1 for floats
    int result = -1;
    std::vector<int> node;    // per instruction: slot of the pushed value
    std::vector<Producer> producer;
    std::vector<int> block;   // per block/loop/if: slot of its result
    Trust trust = Trust::Untrusted;
  };

  Module base_;
  std::vector<Slot> slots_;
  std::vector<std::vector<int>> demand_;  // public(x) forces public(y) for y in demand_[x]
  std::vector<FuncLabels> funcs_;         // parallel to base_.funcs
  std::vector<int> globals_;              // defined globals
  int memory_ = -1;
};

}  // namespace ctwasm

#endif  // CTWASM_INFER_H_
