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

"""Generates random Wasm MVP text modules and freezes reference verdicts.

Each module is assembled with wasmtime's wat2wasm (name section removed) and
validated with wasmtime. wabt.js, if available, is run on the same text and
must agree on bytes and verdict; modules where the two references disagree
are dropped. Output: tests/data/superset/modules.json.

Usage: gen_superset.py [--count 500] [--seed 7] [--wabt DIR]
"""

import argparse
import json
import pathlib
import random
import subprocess
import sys

import wasmtime

ROOT = pathlib.Path(__file__).resolve().parents[2]
OUT = ROOT / "tests" / "data" / "superset" / "modules.json"

INT = ["i32", "i64"]
FLOAT = ["f32", "f64"]
TYPES = INT + FLOAT

IBIN = ["add", "sub", "mul", "div_s", "div_u", "rem_s", "rem_u", "and", "or", "xor", "shl", "shr_s", "shr_u",
        "rotl", "rotr"]
IUN = ["clz", "ctz", "popcnt"]
IREL = ["eq", "ne", "lt_s", "lt_u", "gt_s", "gt_u", "le_s", "le_u", "ge_s", "ge_u"]
FBIN = ["add", "sub", "mul", "div", "min", "max", "copysign"]
FUN = ["abs", "neg", "ceil", "floor", "trunc", "nearest", "sqrt"]
FREL = ["eq", "ne", "lt", "gt", "le", "ge"]

# (result, operand, name)
CONVERSIONS = [
    ("i32", "i64", "i32.wrap_i64"),
    ("i64", "i32", "i64.extend_i32_s"), ("i64", "i32", "i64.extend_i32_u"),
    ("i32", "f32", "i32.trunc_f32_s"), ("i32", "f64", "i32.trunc_f64_u"),
    ("i64", "f64", "i64.trunc_f64_s"), ("i64", "f32", "i64.trunc_f32_u"),
    ("f32", "i32", "f32.convert_i32_s"), ("f32", "i64", "f32.convert_i64_u"),
    ("f64", "i32", "f64.convert_i32_u"), ("f64", "i64", "f64.convert_i64_s"),
    ("f32", "f64", "f32.demote_f64"), ("f64", "f32", "f64.promote_f32"),
    ("i32", "f32", "i32.reinterpret_f32"), ("i64", "f64", "i64.reinterpret_f64"),
    ("f32", "i32", "f32.reinterpret_i32"), ("f64", "i64", "f64.reinterpret_i64"),
]

LOADS = {
    "i32": [("i32.load", 4), ("i32.load8_s", 1), ("i32.load8_u", 1), ("i32.load16_s", 2), ("i32.load16_u", 2)],
    "i64": [("i64.load", 8), ("i64.load8_u", 1), ("i64.load16_s", 2), ("i64.load32_u", 4), ("i64.load32_s", 4)],
    "f32": [("f32.load", 4)],
    "f64": [("f64.load", 8)],
}
STORES = {
    "i32": [("i32.store", 4), ("i32.store8", 1), ("i32.store16", 2)],
    "i64": [("i64.store", 8), ("i64.store8", 1), ("i64.store16", 2), ("i64.store32", 4)],
    "f32": [("f32.store", 4)],
    "f64": [("f64.store", 8)],
}

FLOAT_LITERALS = ["0", "-0", "1.5", "-2.25", "3", "1e10", "0x1p-3", "0x1.8p+1", "inf", "-inf", "nan",
                  "-nan", "nan:0x200000", "123.456", "0.1"]


class Node:
    """A folded instruction: head text, operand nodes, nested bodies."""

    def __init__(self, head, args=(), kind="plain", bodies=(), block_type=""):
        self.head = head
        self.args = list(args)
        self.kind = kind  # plain, block, loop, if
        self.bodies = [list(b) for b in bodies]
        self.block_type = block_type


def flat(nodes, out, indent):
    pad = "  " * indent
    for n in nodes:
        for a in n.args:
            flat([a], out, indent)
        if n.kind == "plain":
            out.append(pad + n.head)
        elif n.kind in ("block", "loop"):
            out.append(pad + n.head + n.block_type)
            flat(n.bodies[0], out, indent + 1)
            out.append(pad + "end")
        else:
            out.append(pad + "if" + n.block_type)
            flat(n.bodies[0], out, indent + 1)
            if len(n.bodies) > 1:
                out.append(pad + "else")
                flat(n.bodies[1], out, indent + 1)
            out.append(pad + "end")


def folded(n):
    if n.kind == "plain":
        inner = " ".join([n.head] + [folded(a) for a in n.args])
        return "(" + inner + ")"
    if n.kind in ("block", "loop"):
        body = " ".join(folded(b) for b in n.bodies[0])
        return "(%s%s %s)" % (n.head, n.block_type, body)
    parts = ["(if" + n.block_type] + [folded(a) for a in n.args]
    parts.append("(then %s)" % " ".join(folded(b) for b in n.bodies[0]))
    if len(n.bodies) > 1:
        parts.append("(else %s)" % " ".join(folded(b) for b in n.bodies[1]))
    return " ".join(parts) + ")"


class FuncGen:
    def __init__(self, rng, mod, params, results, local_types, named):
        self.rng = rng
        self.mod = mod
        self.locals = params + local_types
        self.results = results
        self.named = named
        self.labels = []  # result type or None per enclosing block, innermost last
        self.label_count = 0

    def local_ref(self, i):
        return "$l%d" % i if self.named else str(i)

    def const(self, t):
        r = self.rng
        if t == "i32":
            v = r.choice([0, 1, -1, 7, 255, 0x7fffffff, -0x80000000, r.randrange(-2**31, 2**31)])
            return Node("i32.const " + (hex(v) if v > 0 and r.random() < 0.3 else str(v)))
        if t == "i64":
            v = r.choice([0, 1, -1, 2**40, -2**63, r.randrange(-2**63, 2**63)])
            return Node("i64.const %d" % v)
        return Node("%s.const %s" % (t, r.choice(FLOAT_LITERALS)))

    def memarg(self, width):
        r = self.rng
        s = ""
        if r.random() < 0.4:
            s += " offset=%d" % r.choice([0, 1, 4, 16, 1024, 65535])
        if r.random() < 0.3:
            s += " align=%d" % r.choice([a for a in (1, 2, 4, 8) if a <= width])
        return s

    def expr(self, t, depth):
        r = self.rng
        choices = ["const"]
        locs = [i for i, lt in enumerate(self.locals) if lt == t]
        if locs:
            choices += ["local"] * 3
        globs = [i for i, g in enumerate(self.mod.globals) if g[0] == t]
        if globs:
            choices.append("global")
        if depth > 0:
            choices += ["bin", "bin", "un", "conv", "select", "block", "if", "call", "tee"]
            if t == "i32":
                choices += ["rel", "test"]
            if self.mod.memory:
                choices += ["load", "load"]
                if t == "i32":
                    choices += ["size", "grow"]
        c = r.choice(choices)
        d = depth - 1
        if c == "const":
            return self.const(t)
        if c == "local":
            return Node("local.get " + self.local_ref(r.choice(locs)))
        if c == "tee":
            if not locs:
                return self.const(t)
            return Node("local.tee " + self.local_ref(r.choice(locs)), [self.expr(t, d)])
        if c == "global":
            return Node("global.get $g%d" % r.choice(globs))
        if c == "bin":
            op = r.choice(IBIN if t in INT else FBIN)
            return Node("%s.%s" % (t, op), [self.expr(t, d), self.expr(t, d)])
        if c == "un":
            if t in INT:
                if r.random() < 0.2:
                    return Node(t + ".eqz", [self.expr(t, d)]) if t == "i32" else Node(
                        "i64.extend_i32_u", [Node("i64.eqz", [self.expr("i64", d)])])
                return Node("%s.%s" % (t, r.choice(IUN)), [self.expr(t, d)])
            return Node("%s.%s" % (t, r.choice(FUN)), [self.expr(t, d)])
        if c == "rel":
            ot = r.choice(TYPES)
            op = r.choice(IREL if ot in INT else FREL)
            return Node("%s.%s" % (ot, op), [self.expr(ot, d), self.expr(ot, d)])
        if c == "test":
            ot = r.choice(INT)
            return Node(ot + ".eqz", [self.expr(ot, d)])
        if c == "conv":
            opts = [cv for cv in CONVERSIONS if cv[0] == t]
            res, src, name = r.choice(opts)
            return Node(name, [self.expr(src, d)])
        if c == "select":
            return Node("select", [self.expr(t, d), self.expr(t, d), self.expr("i32", d)])
        if c == "block":
            kind = r.choice(["block", "loop"])
            self.labels.append(t if kind == "block" else None)
            body = self.stmts(r.randint(0, 2), d)
            if kind == "block" and r.random() < 0.4:
                body.append(Node("br_if %d" % 0, [self.expr(t, d), self.expr("i32", d)]))
                body.append(Node("drop", [self.expr(t, d)]) if r.random() < 0.5 else Node("nop"))
            body.append(self.expr(t, d))
            self.labels.pop()
            return Node(kind, kind="block" if kind == "block" else "loop", bodies=[body],
                        block_type=" (result %s)" % t)
        if c == "if":
            self.labels.append(t)
            a = self.stmts(r.randint(0, 1), d) + [self.expr(t, d)]
            b = self.stmts(r.randint(0, 1), d) + [self.expr(t, d)]
            self.labels.pop()
            return Node("if", [self.expr("i32", d)], kind="if", bodies=[a, b], block_type=" (result %s)" % t)
        if c == "call":
            callees = [i for i, f in enumerate(self.mod.func_sigs) if f[1] == [t]]
            if not callees:
                return self.const(t)
            i = r.choice(callees)
            return Node("call $f%d" % i, [self.expr(p, d) for p in self.mod.func_sigs[i][0]])
        if c == "load":
            name, width = r.choice(LOADS[t])
            return Node(name + self.memarg(width), [self.expr("i32", d)])
        if c == "size":
            return Node("memory.size")
        if c == "grow":
            return Node("memory.grow", [self.expr("i32", d)])
        raise AssertionError(c)

    def stmt(self, depth):
        r = self.rng
        choices = ["drop", "nop"]
        if self.locals:
            choices += ["set", "set"]
        if any(g[1] for g in self.mod.globals):
            choices.append("gset")
        if self.mod.memory:
            choices += ["store", "store"]
        if depth > 0:
            choices += ["block", "if", "loop"]
        if self.labels:
            choices.append("br_if")
        c = r.choice(choices)
        d = depth - 1
        if c == "drop":
            return Node("drop", [self.expr(r.choice(TYPES), d)])
        if c == "nop":
            return Node("nop")
        if c == "set":
            i = r.randrange(len(self.locals))
            return Node("local.set " + self.local_ref(i), [self.expr(self.locals[i], d)])
        if c == "gset":
            g = r.choice([i for i, g in enumerate(self.mod.globals) if g[1]])
            return Node("global.set $g%d" % g, [self.expr(self.mod.globals[g][0], d)])
        if c == "store":
            t = r.choice(TYPES)
            name, width = r.choice(STORES[t])
            return Node(name + self.memarg(width), [self.expr("i32", d), self.expr(t, d)])
        if c == "block":
            self.labels.append(None)
            body = self.stmts(r.randint(1, 3), d)
            self.labels.pop()
            return Node("block", kind="block", bodies=[body])
        if c == "loop":
            self.labels.append(None)
            body = self.stmts(r.randint(0, 2), d)
            self.labels.pop()
            return Node("loop", kind="loop", bodies=[body])
        if c == "if":
            self.labels.append(None)
            a = self.stmts(r.randint(1, 2), d)
            bodies = [a] if r.random() < 0.5 else [a, self.stmts(r.randint(1, 2), d)]
            self.labels.pop()
            return Node("if", [self.expr("i32", d)], kind="if", bodies=bodies)
        if c == "br_if":
            void = [i for i, l in enumerate(reversed(self.labels)) if l is None]
            if not void:
                return Node("nop")
            return Node("br_if %d" % r.choice(void), [self.expr("i32", d)])
        raise AssertionError(c)

    def stmts(self, n, depth):
        return [self.stmt(depth) for _ in range(n)]

    def body(self, depth):
        out = self.stmts(self.rng.randint(0, 4), depth)
        if self.results:
            out.append(self.expr(self.results[0], depth))
        return out


class ModGen:
    def __init__(self, rng):
        self.rng = rng
        r = rng
        self.memory = r.random() < 0.6
        self.globals = [(r.choice(TYPES), r.random() < 0.6) for _ in range(r.randint(0, 3))]
        self.import_func = r.random() < 0.3
        n = r.randint(1, 4)
        self.func_sigs = []
        if self.import_func:
            self.func_sigs.append(([r.choice(TYPES) for _ in range(r.randint(0, 2))],
                                   [r.choice(TYPES)] if r.random() < 0.5 else []))
        for _ in range(n):
            params = [r.choice(TYPES) for _ in range(r.randint(0, 3))]
            results = [r.choice(TYPES)] if r.random() < 0.7 else []
            self.func_sigs.append((params, results))

    def render(self, mutate):
        r = self.rng
        lines = ["(module"]
        use_types = r.random() < 0.3
        if use_types:
            for i, (p, res) in enumerate(self.func_sigs):
                lines.append("  (type $t%d (func%s%s))" % (i, "".join(" (param %s)" % x for x in p),
                                                       "".join(" (result %s)" % x for x in res)))
        if self.import_func:
            p, res = self.func_sigs[0]
            sig = "(type $t0)" if use_types else "".join(" (param %s)" % x for x in p) + "".join(
                " (result %s)" % x for x in res)
            lines.append('  (import "env" "f" (func $f0 %s))' % sig.strip())
        if self.memory:
            mx = r.choice(["", " 4", " 1", " 65536"])
            mn = r.choice([0, 1, 1, 2])
            if mx and int(mx) < mn:
                mx = ""
            lines.append("  (memory $m %d%s)" % (mn, mx))
        if r.random() < 0.3 and len(self.func_sigs) > 0:
            lines.append("  (table %d funcref)" % len(self.func_sigs))
            lines.append("  (elem (i32.const 0) %s)" % " ".join("$f%d" % i for i in range(len(self.func_sigs))))
        for i, (t, mut) in enumerate(self.globals):
            gt = "(mut %s)" % t if mut else t
            init = FuncGen(r, self, [], [], [], False).const(t)
            lines.append("  (global $g%d %s %s)" % (i, gt, folded(init)))
        bad = r.randrange(len(self.func_sigs)) if mutate else -1
        for i, (params, results) in enumerate(self.func_sigs):
            if i == 0 and self.import_func:
                continue
            named = r.random() < 0.5
            local_types = [r.choice(TYPES) for _ in range(r.randint(0, 3))]
            g = FuncGen(r, self, params, results, local_types, named)
            body = g.body(r.randint(1, 4))
            head = "  (func $f%d" % i
            if r.random() < 0.4:
                head += ' (export "f%d")' % i
            if use_types:
                head += " (type $t%d)" % i
            if named:
                head += "".join(" (param $l%d %s)" % (k, t) for k, t in enumerate(params))
            elif params:
                head += " (param %s)" % " ".join(params)
            head += "".join(" (result %s)" % t for t in results)
            if named:
                head += "".join(" (local $l%d %s)" % (k + len(params), t) for k, t in enumerate(local_types))
            elif local_types:
                head += " (local %s)" % " ".join(local_types)
            lines.append(head)
            text = []
            if r.random() < 0.5:
                flat(body, text, 2)
            else:
                text = ["    " + folded(n) for n in body]
            if i == bad:
                text = self.mutate(text)
            lines.extend(text)
            lines[-1] += ")"
        if self.memory and r.random() < 0.5:
            lines.append('  (data (i32.const %d) "hello\\00\\ff")' % r.choice([0, 8, 100]))
        if self.memory and r.random() < 0.3:
            lines.append('  (export "mem" (memory $m))')
        lines[-1] += ")"
        return "\n".join(lines) + "\n"

    def mutate(self, text):
        r = self.rng
        junk = ["    i32.add", "    drop", "    i64.const 1", "    f32.const 1", "    (i32.eqz (i64.const 0))",
                "    (local.set 0 (f64.const 0))", "    br 5", "    (i32.load align=8 (i32.const 0))",
                "    select", "    return", "    (f32.neg (i32.const 3))", "    memory.grow",
                "    (global.set 0 (i32.const 1))", "    unreachable", "    call 0"]
        pos = r.randint(0, len(text))
        return text[:pos] + [r.choice(junk)] + text[pos:]


def strip_names(wasm):
    """Removes custom sections from a binary module."""
    out = bytearray(wasm[:8])
    i = 8
    while i < len(wasm):
        sid = wasm[i]
        j = i + 1
        size = shift = 0
        while True:
            b = wasm[j]
            j += 1
            size |= (b & 0x7F) << shift
            shift += 7
            if b < 0x80:
                break
        if sid != 0:
            out += wasm[i:j + size]
        i = j + size
    return bytes(out)


WABT_SCRIPT = r"""
const fs = require('fs');
require(process.argv[process.argv.length - 1])().then((wabt) => {
  const mods = JSON.parse(fs.readFileSync(0, 'utf8'));
  const out = mods.map((text) => {
    try {
      const m = wabt.parseWat('m.wat', text);
      let valid = true;
      try { m.validate(); } catch (e) { valid = false; }
      const bin = m.toBinary({}).buffer;
      return {ok: true, valid, hex: Buffer.from(bin).toString('hex')};
    } catch (e) {
      return {ok: false, error: String(e)};
    }
  });
  process.stdout.write(JSON.stringify(out));
});
"""


def wabt_check(texts, wabt_dir):
    res = subprocess.run(["node", "-e", WABT_SCRIPT, "--", str(pathlib.Path(wabt_dir).resolve())],
                         input=json.dumps(texts), capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=500)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--wabt", default="/tmp/wabtjs/node_modules/wabt")
    ap.add_argument("--out", default=str(OUT))
    args = ap.parse_args()

    rng = random.Random(args.seed)
    engine = wasmtime.Engine()
    candidates = []
    while len(candidates) < args.count * 2:
        text = ModGen(rng).render(mutate=rng.random() < 0.3)
        try:
            wasm = strip_names(bytes(wasmtime.wat2wasm(text)))
        except Exception:
            continue
        try:
            wasmtime.Module.validate(engine, wasm)
            ok = True
        except wasmtime.WasmtimeError:
            ok = False
        candidates.append((text, wasm, ok))

    agreed = candidates
    if pathlib.Path(args.wabt).exists():
        ref = wabt_check([c[0] for c in candidates], args.wabt)
        agreed = []
        for (text, wasm, valid), w in zip(candidates, ref):
            if not w["ok"] or w["valid"] != valid or strip_names(bytes.fromhex(w["hex"])) != wasm:
                continue
            agreed.append((text, wasm, valid))
        print("wabt agreed on %d of %d" % (len(agreed), len(candidates)), file=sys.stderr)

    # Keep roughly a quarter invalid.
    valid = [c for c in agreed if c[2]]
    invalid = [c for c in agreed if not c[2]]
    n_invalid = min(len(invalid), args.count // 4)
    chosen = invalid[:n_invalid] + valid[:args.count - n_invalid]
    if len(chosen) < args.count:
        sys.exit("not enough modules: %d" % len(chosen))
    rng.shuffle(chosen)
    out = [{"name": "m%03d" % i, "wat": t, "valid": v, "wasm": w.hex()} for i, (t, w, v) in enumerate(chosen)]
    pathlib.Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    pathlib.Path(args.out).write_text(json.dumps(out, indent=1) + "\n")
    print("wrote %d modules (%d invalid)" % (len(out), n_invalid), file=sys.stderr)


if __name__ == "__main__":
    main()
