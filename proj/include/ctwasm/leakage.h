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

// Public indistinguishability of values, stores, configurations and actions,
// and a lockstep twin-execution checker built on them.

#ifndef CTWASM_LEAKAGE_H_
#define CTWASM_LEAKAGE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctwasm/exec.h"

namespace ctwasm {

// Raised when two configurations do not share a shape (different modules or
// differently populated stores).
class IncomparableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool values_indist(const Value& a, const Value& b);
bool stores_indist(const Store& a, const Store& b);
bool configs_indist(const Config& a, const Config& b);
bool actions_indist(const Action& a, const Action& b);

// Canonical erasure. Two objects are indistinguishable iff their projections
// are equal.
struct FuncView {
  FuncType type;
  uint32_t instance = 0;
  uint32_t index = 0;
  uint64_t code_hash = 0;
  bool host = false;
  friend bool operator==(const FuncView&, const FuncView&) = default;
};

struct MemView {
  Secrecy sec = Secrecy::Public;
  size_t size = 0;
  std::vector<uint8_t> bytes;  // empty for secret memories
  friend bool operator==(const MemView&, const MemView&) = default;
};

struct InstanceView {
  std::vector<uint32_t> funcs, tables, mems, globals;
  std::vector<std::pair<std::string, std::pair<ExternKind, uint32_t>>> exports;
  friend bool operator==(const InstanceView&, const InstanceView&) = default;
};

struct StoreView {
  std::vector<InstanceView> instances;
  std::vector<FuncView> funcs;
  std::vector<GlobalInst> globals;
  std::vector<TableInst> tables;
  std::vector<MemView> mems;
  friend bool operator==(const StoreView&, const StoreView&) = default;
};

struct FrameView {
  uint32_t func = 0;
  uint32_t pc = 0;
  std::vector<Value> locals;
  std::vector<std::tuple<uint32_t, uint32_t, size_t, bool>> labels;
  size_t base = 0;
  uint32_t arity = 0;
  friend bool operator==(const FrameView&, const FrameView&) = default;
};

struct ConfigView {
  StoreView store;
  uint32_t instance = 0;
  std::vector<Value> stack;
  std::vector<FrameView> frames;
  Status status = Status::Running;
  std::optional<TrapKind> trap;
  std::optional<uint32_t> pending_host;
  std::vector<Value> results;
  friend bool operator==(const ConfigView&, const ConfigView&) = default;
};

StoreView project_view(const Store& s);
ConfigView project_view(const Config& c);
Action project(const Action& a);

// Inputs of one side of a twin run.
struct TwinSide {
  std::vector<Value> args;
  // Bytes written into memory 0 after instantiation, at the given offsets.
  std::vector<std::pair<uint32_t, std::vector<uint8_t>>> memory;
};

struct Verdict {
  enum Kind { Indistinguishable, Diverged, Incomparable } kind = Indistinguishable;
  uint64_t step = 0;  // Diverged: index of the first differing step
  std::optional<Action> action_a, action_b;
  std::string explanation;  // Diverged: what differed; Incomparable: why
  std::optional<uint32_t> func;  // function index of the offending instruction
  std::optional<uint32_t> pc;
  std::optional<SourceSpan> span;
  uint64_t steps = 0;  // steps executed by each side
};

struct LockstepOptions {
  uint64_t fuel = 10'000'000;
  uint64_t config_check_interval = 256;
  ExecOptions exec;
};

// Runs `export_name` twice in lockstep and compares observations step by step.
// The module is not validated here; callers decide whether to require that.
Verdict lockstep_check(std::shared_ptr<const Module> m, const std::string& export_name, const TwinSide& a,
                       const TwinSide& b, const LockstepOptions& options = {});

// Which inputs of an export are secret.
struct SecretSpec {
  std::vector<Value> base_args;         // public parameters take these values
  std::vector<uint32_t> secret_params;  // parameter indices
  std::vector<std::pair<uint32_t, uint32_t>> secret_memory;  // (offset, length)
};

struct TrialSummary {
  uint32_t trials = 0;
  uint32_t diverged = 0;
  uint32_t incomparable = 0;
  std::optional<uint32_t> first_failing_trial;
  std::optional<Verdict> first_failure;
  std::vector<Verdict> verdicts;  // one per trial, in trial order
  bool passed() const { return diverged == 0 && incomparable == 0; }
};

// Pairs the all-zero secret assignment against `trials` random assignments
// drawn from a generator seeded with `seed`. Results do not depend on
// `threads`.
TrialSummary randomized_ct_trial(std::shared_ptr<const Module> m, const std::string& export_name,
                                 const SecretSpec& spec, uint32_t trials, uint64_t seed,
                                 const LockstepOptions& options = {}, unsigned threads = 0);

// Resolves parameter names to indices. A name selects the parameter with
// that name, or every parameter named by it followed by digits (`key` selects
// `$key0` .. `$key7`). Numeric entries are taken as indices.
std::vector<uint32_t> resolve_params(const Module& m, const std::string& export_name,
                                     const std::vector<std::string>& names);

}  // namespace ctwasm

#endif  // CTWASM_LEAKAGE_H_
