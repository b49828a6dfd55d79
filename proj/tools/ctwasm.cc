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

// ctwasm: command line front end.
//
// Exit status: 0 success, 1 error, 2 success with warnings. JSON goes to
// stdout, human diagnostics to stderr.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "ctwasm/binary.h"
#include "ctwasm/corpus.h"
#include "ctwasm/exec.h"
#include "ctwasm/infer.h"
#include "ctwasm/json.h"
#include "ctwasm/leakage.h"
#include "ctwasm/strip.h"
#include "ctwasm/text.h"
#include "ctwasm/validate.h"

namespace {

using namespace ctwasm;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kWarnings = 2;

// Reported errors have already been printed; unwinds to main.
struct Failed {
  int status = kError;
};

bool g_json = false;

void emit_json(const json& j) { std::cout << j.dump(2) << "\n"; }

[[noreturn]] void fail(const std::string& message, json extra = json::object()) {
  if (g_json) {
    extra["ok"] = false;
    extra["error"] = message;
    emit_json(extra);
  } else {
    std::cerr << "error: " << message << "\n";
  }
  throw Failed{};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_out(const std::string& path, const std::string& data) {
  if (path.empty() || path == "-") {
    std::cout << data;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(data.data(), static_cast<std::streamsize>(data.size()))) fail("cannot write " + path);
}

bool is_binary(const std::string& data) { return data.size() >= 4 && data.compare(0, 4, std::string("\0asm", 4)) == 0; }

Module load(const std::string& path) {
  std::string data = slurp(path);
  try {
    if (is_binary(data))
      return decode_module(std::span(reinterpret_cast<const uint8_t*>(data.data()), data.size()));
    return parse_module(data);
  } catch (const ParseError& e) {
    std::string d = format_diagnostic(path, e.span(), e.message());
    if (g_json) fail(e.message(), {{"file", path}, {"span", to_json(e.span())}});
    std::cerr << d << "\n";
    throw Failed{};
  } catch (const DecodeError& e) {
    fail(path + ": offset " + std::to_string(e.offset()) + ": " + std::string(to_string(e.code())) + ": " + e.what());
  }
}

std::string describe(const std::string& file, const Module& m, const ValidationError& e) {
  std::string msg = std::string(to_string(e.code)) + ": " + e.message;
  if (e.func) {
    if (auto s = instr_span(m, *e.func, e.offset)) return format_diagnostic(file, *s, msg);
    return file + ": function " + std::to_string(*e.func) + ", instruction " + std::to_string(e.offset) + ": " + msg;
  }
  return file + ": " + msg;
}

// Validates and reports; throws Failed when invalid.
ValidationResult require_valid(const std::string& file, const Module& m) {
  ValidationResult vr = validate_module(m);
  if (vr.ok()) return vr;
  if (g_json) {
    json errs = json::array();
    for (const auto& e : vr.errors) errs.push_back(to_json(e, &m));
    emit_json({{"ok", false}, {"file", file}, {"errors", errs}});
  } else {
    for (const auto& e : vr.errors) std::cerr << describe(file, m, e) << "\n";
  }
  throw Failed{};
}

uint64_t default_fuel() {
  if (const char* f = std::getenv("CTWASM_FUEL")) {
    try {
      return std::stoull(f);
    } catch (const std::exception&) {
      fail(std::string("CTWASM_FUEL is not a number: ") + f);
    }
  }
  return 100'000'000;
}

std::vector<Value> parse_args(const std::vector<std::string>& args) {
  std::vector<Value> out;
  for (const std::string& a : args) {
    try {
      out.push_back(parse_value(a));
    } catch (const InvokeError& e) {
      fail(e.what());
    }
  }
  return out;
}

int cmd_validate(const std::string& file) {
  Module m = load(file);
  ValidationResult vr = require_valid(file, m);
  if (g_json)
    emit_json({{"ok", true},
               {"file", file},
               {"instructions_checked", vr.instructions_checked},
               {"untrusted", all_untrusted(m)}});
  else
    std::cerr << file << ": valid (" << vr.instructions_checked << " instructions checked)\n";
  return kOk;
}

int cmd_run(const std::string& file, const std::string& name, const std::vector<std::string>& raw_args, bool trace,
            std::optional<uint64_t> fuel) {
  Module m = load(file);
  require_valid(file, m);
  std::vector<Value> args = parse_args(raw_args);
  Store store;
  uint32_t inst;
  try {
    inst = instantiate(store, m);
  } catch (const InstantiateError& e) {
    fail(std::string("instantiation failed: ") + e.what());
  }
  Config cfg;
  try {
    cfg = make_config(std::move(store), inst, name, args, fuel.value_or(default_fuel()));
  } catch (const InvokeError& e) {
    fail(e.what());
  }
  // The trace is line-delimited JSON on stdout, one object per step.
  while (!cfg.terminal()) {
    uint64_t n = cfg.steps;
    Action a = step(cfg);
    if (!trace) continue;
    json line = {{"step", n}};
    line.update(to_json(a));
    std::cout << line.dump() << "\n";
  }
  json results = json::array();
  for (const Value& v : cfg.results) results.push_back(to_json(v));
  if (g_json) {
    json j = {{"ok", cfg.status == Status::Returned},
              {"status", std::string(to_string(cfg.status))},
              {"steps", cfg.steps},
              {"results", results}};
    if (cfg.status == Status::Trapped) j["trap"] = std::string(to_string(cfg.trap));
    if (trace) std::cout << j.dump() << "\n";
    else emit_json(j);
  } else {
    for (const Value& v : cfg.results) std::cout << to_string(v) << "\n";
    if (cfg.status == Status::Trapped) std::cerr << "trap: " << to_string(cfg.trap) << "\n";
    if (cfg.status == Status::FuelExhausted) std::cerr << "fuel exhausted after " << cfg.steps << " steps\n";
  }
  return cfg.status == Status::Returned ? kOk : kError;
}

int cmd_fmt(const std::string& file, const std::string& out) {
  Module m = load(file);
  write_out(out, print_module(m));
  return kOk;
}

int cmd_encode(const std::string& file, const std::string& out) {
  Module m = load(file);
  std::vector<uint8_t> bytes;
  try {
    bytes = encode_module(m);
  } catch (const EncodeError& e) {
    fail(e.what());
  }
  if (out.empty() && (g_json || isatty(STDOUT_FILENO))) fail("encode needs -o OUT");
  write_out(out, std::string(bytes.begin(), bytes.end()));
  if (g_json) emit_json({{"ok", true}, {"bytes", bytes.size()}});
  return kOk;
}

int cmd_decode(const std::string& file, const std::string& out) {
  Module m = load(file);
  write_out(out, print_module(m));
  return kOk;
}

int cmd_strip(const std::string& file, bool paranoid, const std::string& emit, const std::string& out) {
  Module m = load(file);
  require_valid(file, m);
  StripReport r = strip_module(m, paranoid);
  if (emit == "binary") {
    if ((out.empty() || out == "-") && (g_json || isatty(STDOUT_FILENO))) fail("binary output needs -o OUT");
    std::vector<uint8_t> bytes = encode_module(r.module);
    write_out(out, std::string(bytes.begin(), bytes.end()));
  } else {
    std::string text = print_module(r.module);
    if (g_json && (out.empty() || out == "-")) fail("--json needs -o OUT for the module");
    write_out(out, text);
  }
  if (g_json) {
    json w = json::array();
    for (const auto& x : r.warnings) w.push_back(to_json(x));
    emit_json({{"ok", true}, {"warnings", w}, {"input_bytes", r.input_bytes}, {"output_bytes", r.output_bytes}});
  } else {
    for (const auto& x : r.warnings) {
      std::cerr << file << ": warning: " << x.code << ": " << x.message;
      if (x.func) std::cerr << " (function " << *x.func << (x.offset ? ", instruction " + std::to_string(*x.offset) : "") << ")";
      std::cerr << "\n";
    }
  }
  return r.warnings.empty() ? kOk : kWarnings;
}

int cmd_infer(const std::string& file, const std::string& hints_file, const std::string& out) {
  Module m = load(file);
  Hints hints;
  if (!hints_file.empty()) {
    try {
      hints = parse_hints(slurp(hints_file));
    } catch (const HintsError& e) {
      fail(hints_file + ": " + e.what());
    }
  }
  InferResult r;
  try {
    r = infer_labels(m, hints);
  } catch (const InputInvalid& e) {
    if (!g_json)
      for (const auto& err : e.errors()) std::cerr << describe(file, m, err) << "\n";
    fail(e.what());
  } catch (const HintsError& e) {
    fail(e.what());
  }
  if (!r.ok()) {
    if (g_json) {
      json c = json::array();
      for (const auto& x : r.conflicts) c.push_back(to_json(x));
      emit_json({{"ok", false}, {"conflicts", c}, {"stats", to_json(r.stats)}});
    } else {
      for (const auto& x : r.conflicts) {
        std::cerr << file << ": conflict: " << x.message << "\n";
        for (const auto& step : x.chain) std::cerr << "    " << step << "\n";
        std::cerr << "  suggestion: " << x.suggestion << "\n";
      }
    }
    return kError;
  }
  if (g_json && (out.empty() || out == "-")) fail("--json needs -o OUT for the module");
  write_out(out, print_module(*r.module));
  if (g_json) emit_json({{"ok", true}, {"conflicts", json::array()}, {"stats", to_json(r.stats)}});
  return kOk;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

struct CtCheckArgs {
  std::string file, name, secrets_file;
  std::vector<std::string> args, secret_params, secret_memory;
  uint32_t trials = 100;
  uint64_t seed = 0;
  unsigned threads = 0;
  std::optional<uint64_t> fuel;
  bool unchecked = false;
};

int cmd_ct_check(const CtCheckArgs& a) {
  Module m = load(a.file);
  if (!a.unchecked) {
    ValidationResult vr = require_valid(a.file, m);
    (void)vr;
  }
  SecretsFile sf;
  if (!a.secrets_file.empty()) {
    try {
      auto j = json::parse(slurp(a.secrets_file));
      sf.export_name = j.value("export", "");
      for (const auto& v : j.value("args", json::array())) sf.args.push_back(parse_value(v.get<std::string>()));
      sf.secret_params = j.value("secret_params", std::vector<std::string>{});
      for (const auto& r : j.value("secret_memory", json::array()))
        sf.secret_memory.push_back({r.at(0).get<uint32_t>(), r.at(1).get<uint32_t>()});
    } catch (const std::exception& e) {
      fail(a.secrets_file + ": " + e.what());
    }
  }
  std::string name = a.name.empty() ? sf.export_name : a.name;
  if (name.empty()) fail("ct-check needs --invoke NAME");
  const Export* ex = m.find_export(name);
  if (!ex || ex->kind != ExternKind::Func) fail("no exported function named '" + name + "'");
  const FuncType& ft = m.func_type(ex->index);

  SecretSpec spec;
  if (!a.args.empty()) spec.base_args = parse_args(a.args);
  else if (!sf.args.empty()) spec.base_args = sf.args;
  else
    for (ValType t : ft.params) spec.base_args.push_back(Value::zero(t));
  std::vector<std::string> names = sf.secret_params;
  for (const auto& p : a.secret_params)
    for (const auto& s : split(p)) names.push_back(s);
  spec.secret_memory = sf.secret_memory;
  for (const auto& r : a.secret_memory) {
    auto colon = r.find(':');
    if (colon == std::string::npos) fail("--secret-memory expects OFFSET:LENGTH, got '" + r + "'");
    try {
      spec.secret_memory.push_back(
          {static_cast<uint32_t>(std::stoul(r.substr(0, colon), nullptr, 0)),
           static_cast<uint32_t>(std::stoul(r.substr(colon + 1), nullptr, 0))});
    } catch (const std::exception&) {
      fail("--secret-memory expects OFFSET:LENGTH, got '" + r + "'");
    }
  }
  LockstepOptions lo;
  lo.fuel = a.fuel.value_or(default_fuel());
  TrialSummary s;
  try {
    spec.secret_params = resolve_params(m, name, names);
    s = randomized_ct_trial(std::make_shared<const Module>(m), name, spec, a.trials, a.seed, lo, a.threads);
  } catch (const InvokeError& e) {
    fail(e.what());
  } catch (const InstantiateError& e) {
    fail(std::string("instantiation failed: ") + e.what());
  }
  if (g_json) {
    json j = to_json(s);
    j["ok"] = s.passed();
    j["seed"] = a.seed;
    emit_json(j);
  } else if (s.passed()) {
    std::cout << "pass: " << s.trials << " trials, no divergence (seed " << a.seed << ")\n";
  } else {
    const Verdict& v = *s.first_failure;
    std::string msg = "trial " + std::to_string(*s.first_failing_trial) + ": " +
                      (v.kind == Verdict::Diverged ? "diverged at step " + std::to_string(v.step) + ": " : "") +
                      v.explanation;
    if (v.span) std::cerr << format_diagnostic(a.file, *v.span, msg) << "\n";
    else std::cerr << a.file << ": " << msg << "\n";
    std::cout << "fail: " << s.diverged << " of " << s.trials << " trials diverged\n";
  }
  return s.passed() ? kOk : kError;
}

int cmd_corpus(const std::string& dir, uint32_t trials, uint64_t seed) {
  CorpusOptions o;
  o.trials = trials;
  o.seed = seed;
  std::vector<EntryReport> reports;
  try {
    reports = run_corpus(dir, o);
  } catch (const std::exception& e) {
    fail(e.what());
  }
  bool ok = true;
  json j = json::array();
  for (const auto& r : reports) {
    ok = ok && r.ok();
    json stages = json::array();
    for (const auto& s : r.stages) {
      stages.push_back({{"stage", s.stage}, {"ok", s.ok}, {"detail", s.detail}});
      if (!g_json)
        std::cout << r.name << " " << s.stage << ": " << (s.ok ? "ok" : "FAILED " + s.detail) << "\n";
    }
    j.push_back({{"entry", r.name}, {"ok", r.ok()}, {"stages", stages}});
  }
  if (g_json) emit_json({{"ok", ok}, {"entries", j}});
  return ok ? kOk : kError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CT-Wasm toolchain: validate, run, transform and check constant-time WebAssembly"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json", g_json, "Print machine readable JSON on stdout");

  std::string file, out, name, hints, emit = "text";
  std::vector<std::string> args;
  bool trace = false, paranoid = false;
  std::optional<uint64_t> fuel;

  auto* validate = app.add_subcommand("validate", "Type check a module");
  validate->add_option("FILE", file, "Module (.cwat text or binary)")->required();

  auto* run = app.add_subcommand("run", "Instantiate a module and invoke an export");
  run->add_option("FILE", file)->required();
  run->add_option("--invoke", name, "Export to call")->required();
  run->add_option("ARGS", args, "Arguments as type:value, e.g. s32:7");
  run->add_flag("--trace", trace, "Print the observation of every step as a JSON line");
  run->add_option("--fuel", fuel, "Step budget (default $CTWASM_FUEL or 100000000)");

  auto* fmt = app.add_subcommand("fmt", "Print a module in canonical text form");
  fmt->add_option("FILE", file)->required();
  fmt->add_option("-o", out, "Output file (default stdout)");

  auto* encode = app.add_subcommand("encode", "Convert a module to the binary format");
  encode->add_option("FILE", file)->required();
  encode->add_option("-o", out, "Output file")->required();

  auto* decode = app.add_subcommand("decode", "Convert a binary module to text");
  decode->add_option("FILE", file)->required();
  decode->add_option("-o", out, "Output file (default stdout)");

  auto* strip = app.add_subcommand("strip", "Erase annotations, producing plain WebAssembly");
  strip->add_option("FILE", file)->required();
  strip->add_flag("--paranoid", paranoid, "Also warn about secrets reachable by the host");
  strip->add_option("--emit", emit, "Output format")->check(CLI::IsMember({"text", "binary"}));
  strip->add_option("-o", out, "Output file (default stdout)");

  auto* infer = app.add_subcommand("infer", "Infer secrecy annotations for a plain module");
  infer->add_option("FILE", file)->required();
  infer->add_option("--hints", hints, "Hints JSON file");
  infer->add_option("-o", out, "Output file (default stdout)");

  CtCheckArgs ct;
  auto* ctcheck = app.add_subcommand("ct-check", "Compare twin runs with zero and random secrets");
  ctcheck->add_option("FILE", ct.file)->required();
  ctcheck->add_option("--invoke", ct.name, "Export to call");
  ctcheck->add_option("ARGS", ct.args, "Public arguments as type:value (default zero)");
  ctcheck->add_option("--secret-params", ct.secret_params, "Secret parameters, by name or index")->delimiter(',');
  ctcheck->add_option("--secret-memory", ct.secret_memory, "Secret memory regions OFFSET:LENGTH")->delimiter(',');
  ctcheck->add_option("--secrets", ct.secrets_file, "secrets.json describing the export and its secret inputs");
  ctcheck->add_option("--trials", ct.trials, "Number of trials")->capture_default_str();
  ctcheck->add_option("--seed", ct.seed, "Random seed")->capture_default_str();
  ctcheck->add_option("--threads", ct.threads, "Worker threads (default: hardware)");
  ctcheck->add_option("--fuel", ct.fuel, "Step budget per run");
  ctcheck->add_flag("--unchecked", ct.unchecked, "Skip validation (for testing the checker)")->group("");

  std::string corpus_dir;
  uint32_t corpus_trials = 100;
  uint64_t corpus_seed = 42;
  auto* corpus = app.add_subcommand("corpus", "Check every corpus entry end to end");
  corpus->add_option("DIR", corpus_dir)->required();
  corpus->add_option("--trials", corpus_trials, "Constant-time trials and random inputs per entry")
      ->capture_default_str();
  corpus->add_option("--seed", corpus_seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }

  try {
    if (*validate) return cmd_validate(file);
    if (*run) return cmd_run(file, name, args, trace, fuel);
    if (*fmt) return cmd_fmt(file, out);
    if (*encode) return cmd_encode(file, out);
    if (*decode) return cmd_decode(file, out);
    if (*strip) return cmd_strip(file, paranoid, emit, out);
    if (*infer) return cmd_infer(file, hints, out);
    if (*ctcheck) return cmd_ct_check(ct);
    if (*corpus) return cmd_corpus(corpus_dir, corpus_trials, corpus_seed);
  } catch (const Failed& f) {
    return f.status;
  } catch (const std::exception& e) {
    if (g_json) emit_json({{"ok", false}, {"error", e.what()}});
    else std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
