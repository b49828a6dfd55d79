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

// JSON forms of diagnostics and reports.

#ifndef CTWASM_JSON_H_
#define CTWASM_JSON_H_

#include <nlohmann/json.hpp>

#include "ctwasm/exec.h"
#include "ctwasm/infer.h"
#include "ctwasm/leakage.h"
#include "ctwasm/strip.h"
#include "ctwasm/validate.h"

namespace ctwasm {

nlohmann::json to_json(const SourceSpan& s);
nlohmann::json to_json(const Value& v);
nlohmann::json to_json(const ValidationError& e, const Module* m = nullptr);
nlohmann::json to_json(const Action& a);
nlohmann::json to_json(const Verdict& v);
nlohmann::json to_json(const TrialSummary& s);
nlohmann::json to_json(const StripWarning& w);
nlohmann::json to_json(const Conflict& c);
nlohmann::json to_json(const InferStats& s);

// Source span of instruction `offset` in function `func`, when recorded.
std::optional<SourceSpan> instr_span(const Module& m, uint32_t func, uint32_t offset);

}  // namespace ctwasm

#endif  // CTWASM_JSON_H_
