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

// Loading and checking the corpus under corpus/<name>/.
//
//   impl.cwat     the module
//   vectors.json  [{"name", "export", "args": ["s32:1", ...],
//                   "memory": [{"offset", "hex"}],
//                   "expect": {"results": [...], "memory": [{"offset", "hex"}]}}]
//   secrets.json  {"export", "args", "secret_params": [names],
//                  "secret_memory": [[offset, length]],
//                  "arg_ranges": {"name or index": [lo, hi]}}
//   expect.json   {"valid": true, "trust": "untrusted"}
//   hints.json    optional hints for inference on the stripped module

#ifndef CTWASM_CORPUS_H_
#define CTWASM_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ctwasm/exec.h"
#include "ctwasm/infer.h"
#include "ctwasm/leakage.h"
#include "ctwasm/validate.h"

namespace ctwasm {

struct MemoryImage {
  uint32_t offset = 0;
  std::vector<uint8_t> bytes;
};

struct TestVector {
  std::string name;
  std::string export_name;
  std::vector<Value> args;
  std::vector<MemoryImage> memory;
  std::vector<Value> expect_results;
  std::vector<MemoryImage> expect_memory;
};

struct SecretsFile {
  std::string export_name;
  std::vector<Value> args;
  std::vector<std::string> secret_params;
  std::vector<std::pair<uint32_t, uint32_t>> secret_memory;
  std::map<std::string, std::pair<uint64_t, uint64_t>> arg_ranges;
};

struct CorpusEntry {
  std::string name;
  std::filesystem::path dir;
  std::string source;
  Module module;
  std::vector<TestVector> vectors;
  SecretsFile secrets;
  bool expect_valid = true;
  Trust expect_trust = Trust::Untrusted;
  std::optional<Hints> hints;
};

struct NegativeCase {
  std::string file;
  ErrorCode expected;
  Module module;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& p);
std::vector<uint8_t> from_hex(std::string_view hex);
std::string to_hex(const std::vector<uint8_t>& bytes);

CorpusEntry load_entry(const std::filesystem::path& dir);
// Every subdirectory of `root` holding an impl.cwat, sorted by name.
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& root);
std::vector<NegativeCase> load_negative(const std::filesystem::path& dir);

// Outcome of running an export on a fresh instance.
struct RunOutcome {
  Status status = Status::Returned;
  TrapKind trap = TrapKind::Unreachable;
  std::vector<Value> results;
  std::vector<uint8_t> memory;  // memory 0 after the run, if any
  uint64_t steps = 0;
};

RunOutcome run_export(const Module& m, const std::string& export_name, const std::vector<Value>& args,
                      const std::vector<MemoryImage>& memory, uint64_t fuel = 1'000'000'000);

// Empty when the vector passes, otherwise a description of the mismatch.
std::string check_vector(const Module& m, const TestVector& v);

SecretSpec secret_spec(const Module& m, const SecretsFile& s);

// Random inputs for `s.export_name`: every parameter drawn from its range
// (full width by default) and every secret memory region filled at random.
struct RandomInput {
  std::vector<Value> args;
  std::vector<MemoryImage> memory;
};
RandomInput random_input(const Module& m, const SecretsFile& s, std::mt19937_64& rng);

// Compares `original` and `stripped` on one input: status, results bit for
// bit (ignoring secrecy) and the final memory. Empty when equal.
std::string compare_runs(const Module& original, const Module& stripped, const std::string& export_name,
                         const RandomInput& input);

struct StageReport {
  std::string stage;
  bool ok = true;
  std::string detail;
};

struct EntryReport {
  std::string name;
  std::vector<StageReport> stages;
  bool ok() const;
};

struct CorpusOptions {
  uint32_t trials = 100;
  uint64_t seed = 42;
  uint32_t strip_vectors = 100;
};

// Validates, runs vectors, strips and re-runs, and ct-checks every entry.
std::vector<EntryReport> run_corpus(const std::filesystem::path& root, const CorpusOptions& options = {});

}  // namespace ctwasm

#endif  // CTWASM_CORPUS_H_
