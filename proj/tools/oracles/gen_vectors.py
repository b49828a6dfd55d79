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

"""Regenerates corpus/*/vectors.json from independent references.

SHA-256 comes from hashlib, Salsa20 from pycryptodome, TEA from tea_ref.c
compiled with the system C compiler. Output is deterministic.
"""

import hashlib
import json
import pathlib
import random
import struct
import subprocess
import sys
import tempfile

from Crypto.Cipher import Salsa20

ROOT = pathlib.Path(__file__).resolve().parents[2]
CORPUS = ROOT / "corpus"
HERE = pathlib.Path(__file__).resolve().parent

SHA_DIGEST = 49440
SALSA_ECRYPT_256_SET1_V0 = bytes.fromhex(
    "e3be8fdd8beca2e3ea8ef9475b29a6e7003951e1097a5c38d23b7a5fad9f6844"
    "b22c97559e2723c7cbbd3fe4fc8d9a0744652a83e72a9c461876af4d7ef1a117")


def s32(x):
    return "s32:0x%08x" % x


def words(b):
    return list(struct.unpack("<%dI" % (len(b) // 4), b))


def write(name, file, data):
    path = CORPUS / name / file
    path.write_text(json.dumps(data, indent=2) + "\n")


def tea_reference(cases):
    with tempfile.TemporaryDirectory() as tmp:
        exe = pathlib.Path(tmp) / "tea_ref"
        subprocess.run(["cc", "-O2", "-o", str(exe), str(HERE / "tea_ref.c")], check=True)
        stdin = "".join(" ".join("%x" % w for w in c) + "\n" for c in cases)
        out = subprocess.run([str(exe)], input=stdin, capture_output=True, text=True, check=True).stdout
    return [tuple(int(x, 16) for x in line.split()) for line in out.splitlines()]


def tea(rng):
    cases = [(0, 0, 0, 0, 0, 0), (0x01234567, 0x89abcdef, 0x00112233, 0x44556677, 0x8899aabb, 0xccddeeff)]
    cases += [tuple(rng.getrandbits(32) for _ in range(6)) for _ in range(8)]
    out = tea_reference(cases)
    assert out[0] == (0x41EA3A0A, 0x94BAA940)
    vectors = []
    for i, (c, (c0, c1)) in enumerate(zip(cases, out)):
        key = [s32(k) for k in c[2:]]
        packed = "s64:0x%08x%08x"
        vectors.append({"name": "encrypt-%d" % i, "export": "encrypt",
                        "args": [s32(c[0]), s32(c[1])] + key,
                        "expect": {"results": [packed % (c0, c1)]}})
        vectors.append({"name": "decrypt-%d" % i, "export": "decrypt",
                        "args": [s32(c0), s32(c1)] + key,
                        "expect": {"results": [packed % (c[0], c[1])]}})
    write("tea", "vectors.json", vectors)
    write("tea", "secrets.json", {"export": "encrypt", "args": ["s32:0"] * 6, "secret_params": ["v", "k"]})
    write("tea", "hints.json", {})


def salsa20(rng):
    def vector(name, key, nonce, msg):
        ks = Salsa20.new(key=key, nonce=nonce).encrypt(bytes(len(msg)))
        ct = bytes(a ^ b for a, b in zip(msg, ks))
        n0, n1 = words(nonce)
        v = {"name": name, "export": "stream_xor",
             "args": [s32(w) for w in words(key)] + ["i32:0x%08x" % n0, "i32:0x%08x" % n1, "i32:%d" % len(msg)],
             "memory": [{"offset": 0, "hex": msg.hex()}] if msg else [],
             "expect": {"results": [], "memory": [{"offset": 0, "hex": ct.hex()}] if msg else []}}
        return v, ks

    ecrypt_key = bytes([0x80]) + bytes(31)
    v, ks = vector("ecrypt-256-set1-v0", ecrypt_key, bytes(8), bytes(64))
    assert ks == SALSA_ECRYPT_256_SET1_V0
    vectors = [v]
    for n in [0, 1, 63, 64, 65, 128, 200, 1000]:
        key = bytes(rng.getrandbits(8) for _ in range(32))
        nonce = bytes(rng.getrandbits(8) for _ in range(8))
        msg = bytes(rng.getrandbits(8) for _ in range(n))
        vectors.append(vector("random-%d" % n, key, nonce, msg)[0])
    write("salsa20", "vectors.json", vectors)
    write("salsa20", "secrets.json", {
        "export": "stream_xor",
        "args": ["s32:0"] * 8 + ["i32:0x03020100", "i32:0x07060504", "i32:64"],
        "secret_params": ["key"],
        "secret_memory": [[0, 64]],
        "arg_ranges": {"len": [0, 256]}})
    write("salsa20", "hints.json", {"exports": {"stream_xor": {"params": {"8": "public", "9": "public", "10": "public"}}}})


def sha256(rng):
    messages = [
        ("abc", b"abc"),
        ("empty", b""),
        ("two-block", b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"),
    ]
    for n in [55, 56, 63, 64, 65, 119, 120, 1000]:
        messages.append(("random-%d" % n, bytes(rng.getrandbits(8) for _ in range(n))))
    vectors = []
    for name, msg in messages:
        digest = hashlib.sha256(msg).digest()
        vectors.append({"name": name, "export": "sha256", "args": ["i32:%d" % len(msg)],
                        "memory": [{"offset": 0, "hex": msg.hex()}] if msg else [],
                        "expect": {"results": [], "memory": [{"offset": SHA_DIGEST, "hex": digest.hex()}]}})
    assert vectors[0]["expect"]["memory"][0]["hex"] == \
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    write("sha256", "vectors.json", vectors)
    write("sha256", "secrets.json", {"export": "sha256", "args": ["i32:64"], "secret_params": [],
                                     "secret_memory": [[0, 64]], "arg_ranges": {"0": [0, 256]}})
    write("sha256", "hints.json", {"exports": {"sha256": {"params": {"0": "public"}}}})


def main():
    rng = random.Random(20260415)
    tea(rng)
    salsa20(rng)
    sha256(rng)
    for name in ["tea", "salsa20", "sha256"]:
        write(name, "expect.json", {"valid": True, "trust": "untrusted"})
    return 0


if __name__ == "__main__":
    sys.exit(main())
