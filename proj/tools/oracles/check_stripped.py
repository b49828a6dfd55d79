#!/usr/bin/env python3
# Copyright 2026 The ctwasm Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS-IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Strips each corpus module and runs the binary through base-Wasm tools.

Records the stripped bytes with the verdicts of wasmtime (decode + validate)
and wabt.js (readWasm + validate) in tests/data/stripped_oracle.json. With
--check, compares against the recorded file instead and exits non-zero on any
difference or rejection.

Usage: check_stripped.py CTWASM [--wabt DIR] [--check]
"""

import argparse
import json
import pathlib
import subprocess
import sys

import wasmtime

ROOT = pathlib.Path(__file__).resolve().parents[2]
OUT = ROOT / "tests" / "data" / "stripped_oracle.json"

WABT_SCRIPT = r"""
const fs = require('fs');
require(process.argv[process.argv.length - 1])().then((wabt) => {
  const mods = JSON.parse(fs.readFileSync(0, 'utf8'));
  const out = mods.map((hex) => {
    try {
      const m = wabt.readWasm(new Uint8Array(Buffer.from(hex, 'hex')), {readDebugNames: false});
      m.validate();
      return true;
    } catch (e) {
      return false;
    }
  });
  process.stdout.write(JSON.stringify(out));
});
"""


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("ctwasm")
    ap.add_argument("--wabt", default="/tmp/wabtjs/node_modules/wabt")
    ap.add_argument("--check", action="store_true")
    args = ap.parse_args()

    engine = wasmtime.Engine()
    records = {}
    for impl in sorted((ROOT / "corpus").glob("*/impl.cwat")):
        name = impl.parent.name
        wasm = subprocess.run([args.ctwasm, "strip", str(impl), "--emit", "binary"], capture_output=True,
                              check=True).stdout
        try:
            wasmtime.Module.validate(engine, wasm)
            ok = True
        except wasmtime.WasmtimeError:
            ok = False
        records[name] = {"wasm": wasm.hex(), "wasmtime": ok}
    if pathlib.Path(args.wabt).exists():
        names = list(records)
        res = subprocess.run(["node", "-e", WABT_SCRIPT, "--", str(pathlib.Path(args.wabt).resolve())],
                             input=json.dumps([records[n]["wasm"] for n in names]), capture_output=True,
                             text=True, check=True)
        for n, ok in zip(names, json.loads(res.stdout)):
            records[n]["wabt"] = ok

    if args.check:
        frozen = json.loads(OUT.read_text())
        bad = [n for n in records
               if any(frozen.get(n, {}).get(k) != v for k, v in records[n].items())
               or not records[n]["wasmtime"] or not records[n].get("wabt", True)]
        for n in bad:
            print("%s: stripped output differs from the recorded one or was rejected" % n, file=sys.stderr)
        return 1 if bad else 0
    OUT.write_text(json.dumps(records, indent=1) + "\n")
    for n, r in records.items():
        print(n, "wasmtime", r["wasmtime"], "wabt", r.get("wabt"), "bytes", len(r["wasm"]) // 2, file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
