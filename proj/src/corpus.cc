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

#include "ctwasm/corpus.h"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "ctwasm/strip.h"
#include "ctwasm/text.h"

namespace ctwasm {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw CorpusError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<uint8_t> from_hex(std::string_view hex) {
  if (hex.size() % 2) throw CorpusError("odd-length hex string");
  std::vector<uint8_t> out;
  for (size_t i = 0; i < hex.size(); i += 2) {
    auto nib = [](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      throw CorpusError(std::string("bad hex digit '") + c + "'");
    };
    out.push_back(static_cast<uint8_t>(nib(hex[i]) * 16 + nib(hex[i + 1])));
  }
  return out;
}

std::string to_hex(const std::vector<uint8_t>& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (uint8_t b : bytes) {
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

namespace {

json read_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw CorpusError(p.string() + ": " + e.what());
  }
}

std::vector<Value> values(const json& j) {
  std::vector<Value> out;
  for (const auto& v : j) out.push_back(parse_value(v.get<std::string>()));
  return out;
}

std::vector<MemoryImage> images(const json& j) {
  std::vector<MemoryImage> out;
  for (const auto& m : j) out.push_back({m.at("offset").get<uint32_t>(), from_hex(m.at("hex").get<std::string>())});
  return out;
}

}  // namespace

CorpusEntry load_entry(const fs::path& dir) {
  CorpusEntry e;
  e.name = dir.filename().string();
  e.dir = dir;
  e.source = read_file(dir / "impl.cwat");
  try {
    e.module = parse_module(e.source);
  } catch (const ParseError& pe) {
    throw CorpusError(format_diagnostic((dir / "impl.cwat").string(), pe.span(), pe.message()));
  }
  try {
    if (fs::exists(dir / "vectors.json"))
      for (const auto& v : read_json(dir / "vectors.json")) {
        TestVector t;
        t.name = v.value("name", "");
        t.export_name = v.at("export").get<std::string>();
        t.args = values(v.value("args", json::array()));
        t.memory = images(v.value("memory", json::array()));
        const json& ex = v.at("expect");
        t.expect_results = values(ex.value("results", json::array()));
        t.expect_memory = images(ex.value("memory", json::array()));
        e.vectors.push_back(std::move(t));
      }
    if (fs::exists(dir / "secrets.json")) {
      json s = read_json(dir / "secrets.json");
      e.secrets.export_name = s.at("export").get<std::string>();
      e.secrets.args = values(s.value("args", json::array()));
      e.secrets.secret_params = s.value("secret_params", std::vector<std::string>{});
      for (const auto& r : s.value("secret_memory", json::array()))
        e.secrets.secret_memory.push_back({r.at(0).get<uint32_t>(), r.at(1).get<uint32_t>()});
      json ranges = s.value("arg_ranges", json::object());
      for (auto& [k, r] : ranges.items())
        e.secrets.arg_ranges[k] = {r.at(0).get<uint64_t>(), r.at(1).get<uint64_t>()};
    }
    if (fs::exists(dir / "expect.json")) {
      json x = read_json(dir / "expect.json");
      e.expect_valid = x.value("valid", true);
      e.expect_trust = x.value("trust", "untrusted") == "trusted" ? Trust::Trusted : Trust::Untrusted;
    }
  } catch (const json::exception& ex) {
    throw CorpusError(dir.string() + ": " + ex.what());
  }
  if (fs::exists(dir / "hints.json")) e.hints = parse_hints(read_file(dir / "hints.json"));
  return e;
}

std::vector<CorpusEntry> load_corpus(const fs::path& root) {
  std::vector<fs::path> dirs;
  for (const auto& d : fs::directory_iterator(root))
    if (d.is_directory() && fs::exists(d.path() / "impl.cwat")) dirs.push_back(d.path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<CorpusEntry> out;
  for (const fs::path& d : dirs) out.push_back(load_entry(d));
  return out;
}

std::vector<NegativeCase> load_negative(const fs::path& dir) {
  json x = read_json(dir / "expect.json");
  std::vector<NegativeCase> out;
  for (auto& [file, code] : x.items()) {
    auto c = error_code_from_string(code.get<std::string>());
    if (!c) throw CorpusError("unknown error code " + code.get<std::string>());
    NegativeCase n{file, *c, {}};
    std::string src = read_file(dir / file);
    try {
      n.module = parse_module(src);
    } catch (const ParseError& pe) {
      throw CorpusError(format_diagnostic((dir / file).string(), pe.span(), pe.message()));
    }
    out.push_back(std::move(n));
  }
  return out;
}

RunOutcome run_export(const Module& m, const std::string& export_name, const std::vector<Value>& args,
                      const std::vector<MemoryImage>& memory, uint64_t fuel) {
  Store store;
  uint32_t inst = instantiate(store, m);
  const ModuleInst& mi = store.instances[inst];
  for (const MemoryImage& img : memory) {
    if (mi.mems.empty()) throw InvokeError("module has no memory");
    MemInst& mem = store.mems[mi.mems[0]];
    if (static_cast<uint64_t>(img.offset) + img.bytes.size() > mem.bytes.size())
      throw InvokeError("memory image out of range");
    std::copy(img.bytes.begin(), img.bytes.end(), mem.bytes.begin() + img.offset);
  }
  InvokeResult r = invoke(store, inst, export_name, args, fuel, false);
  RunOutcome o{r.status, r.trap, r.results, {}, r.steps};
  if (!store.instances[inst].mems.empty()) o.memory = store.mems[store.instances[inst].mems[0]].bytes;
  return o;
}

std::string check_vector(const Module& m, const TestVector& v) {
  RunOutcome o = run_export(m, v.export_name, v.args, v.memory);
  if (o.status != Status::Returned) {
    std::string s = "did not return: " + std::string(to_string(o.status));
    if (o.status == Status::Trapped) s += " (" + std::string(to_string(o.trap)) + ")";
    return s;
  }
  if (o.results != v.expect_results) {
    std::string s = "results [";
    for (const Value& x : o.results) s += to_string(x) + " ";
    s += "] expected [";
    for (const Value& x : v.expect_results) s += to_string(x) + " ";
    return s + "]";
  }
  for (const MemoryImage& img : v.expect_memory) {
    if (static_cast<uint64_t>(img.offset) + img.bytes.size() > o.memory.size())
      return "expected memory image out of range";
    std::vector<uint8_t> got(o.memory.begin() + img.offset, o.memory.begin() + img.offset + img.bytes.size());
    if (got != img.bytes)
      return "memory at " + std::to_string(img.offset) + " is " + to_hex(got) + ", expected " + to_hex(img.bytes);
  }
  return {};
}

SecretSpec secret_spec(const Module& m, const SecretsFile& s) {
  SecretSpec spec;
  spec.base_args = s.args;
  spec.secret_params = resolve_params(m, s.export_name, s.secret_params);
  spec.secret_memory = s.secret_memory;
  return spec;
}

RandomInput random_input(const Module& m, const SecretsFile& s, std::mt19937_64& rng) {
  const Export* ex = m.find_export(s.export_name);
  if (!ex || ex->kind != ExternKind::Func) throw CorpusError("no exported function " + s.export_name);
  const FuncType& ft = m.func_type(ex->index);
  std::vector<std::optional<std::pair<uint64_t, uint64_t>>> ranges(ft.params.size());
  for (const auto& [name, r] : s.arg_ranges)
    for (uint32_t i : resolve_params(m, s.export_name, {name})) ranges[i] = r;
  RandomInput in;
  for (size_t i = 0; i < ft.params.size(); ++i) {
    uint64_t bits = rng();
    if (ranges[i]) bits = std::uniform_int_distribution<uint64_t>(ranges[i]->first, ranges[i]->second)(rng);
    ValType t = ft.params[i];
    if (t.num == NumType::I32 || t.num == NumType::F32) bits &= 0xFFFFFFFFu;
    in.args.push_back(Value{t, bits});
  }
  for (auto [off, len] : s.secret_memory) {
    MemoryImage img{off, std::vector<uint8_t>(len)};
    for (uint8_t& b : img.bytes) b = static_cast<uint8_t>(rng());
    in.memory.push_back(std::move(img));
  }
  return in;
}

std::string compare_runs(const Module& original, const Module& stripped, const std::string& export_name,
                         const RandomInput& input) {
  RunOutcome a = run_export(original, export_name, input.args, input.memory);
  std::vector<Value> pub_args;
  for (Value v : input.args) pub_args.push_back(Value{ValType(v.type.num), v.bits});
  RunOutcome b = run_export(stripped, export_name, pub_args, input.memory);
  if (a.status != b.status || (a.status == Status::Trapped && a.trap != b.trap))
    return "runs ended differently: " + std::string(to_string(a.status)) + " vs " + std::string(to_string(b.status));
  if (a.results.size() != b.results.size()) return "result counts differ";
  for (size_t i = 0; i < a.results.size(); ++i)
    if (a.results[i].type.num != b.results[i].type.num || a.results[i].bits != b.results[i].bits)
      return "result " + std::to_string(i) + ": " + to_string(a.results[i]) + " vs " + to_string(b.results[i]);
  if (a.memory != b.memory) return "final memories differ";
  return {};
}

bool EntryReport::ok() const {
  return std::all_of(stages.begin(), stages.end(), [](const StageReport& s) { return s.ok; });
}

std::vector<EntryReport> run_corpus(const fs::path& root, const CorpusOptions& options) {
  std::vector<EntryReport> out;
  for (const CorpusEntry& e : load_corpus(root)) {
    EntryReport r{e.name, {}};
    auto stage = [&](std::string name, auto&& fn) {
      StageReport s{std::move(name), true, {}};
      try {
        s.detail = fn();
        s.ok = s.detail.empty();
      } catch (const std::exception& ex) {
        s.ok = false;
        s.detail = ex.what();
      }
      r.stages.push_back(std::move(s));
    };
    stage("validate", [&]() -> std::string {
      ValidationResult vr = validate_module(e.module);
      if (vr.ok() != e.expect_valid) return vr.ok() ? "validated unexpectedly" : vr.errors[0].message;
      if (e.expect_trust == Trust::Untrusted && !all_untrusted(e.module)) return "not every function is untrusted";
      return {};
    });
    stage("vectors", [&]() -> std::string {
      for (const TestVector& v : e.vectors)
        if (std::string d = check_vector(e.module, v); !d.empty()) return v.name + ": " + d;
      return {};
    });
    stage("strip", [&]() -> std::string {
      StripReport sr = strip_module(e.module);
      if (!sr.warnings.empty()) return sr.warnings[0].code + ": " + sr.warnings[0].message;
      if (auto c = ct_constructs(sr.module); !c.empty()) return "stripped output still has " + c[0];
      for (const TestVector& v : e.vectors) {
        TestVector pv = v;
        for (Value& x : pv.args) x.type = ValType(x.type.num);
        for (Value& x : pv.expect_results) x.type = ValType(x.type.num);
        if (std::string d = check_vector(sr.module, pv); !d.empty()) return "stripped " + v.name + ": " + d;
      }
      std::mt19937_64 rng(options.seed);
      for (uint32_t i = 0; i < options.strip_vectors; ++i) {
        RandomInput in = random_input(e.module, e.secrets, rng);
        if (std::string d = compare_runs(e.module, sr.module, e.secrets.export_name, in); !d.empty())
          return "random input " + std::to_string(i) + ": " + d;
      }
      return {};
    });
    stage("ct-check", [&]() -> std::string {
      auto m = std::make_shared<const Module>(e.module);
      TrialSummary t = randomized_ct_trial(m, e.secrets.export_name, secret_spec(e.module, e.secrets), options.trials,
                                           options.seed);
      if (!t.passed())
        return "trial " + std::to_string(*t.first_failing_trial) + ": " + t.first_failure->explanation;
      return {};
    });
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ctwasm
