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

// Reference TEA. Reads lines "v0 v1 k0 k1 k2 k3" (hex) from stdin and prints
// "c0 c1" for each.

#include <stdint.h>
#include <stdio.h>

static void encrypt(uint32_t* v, const uint32_t* k) {
  uint32_t v0 = v[0], v1 = v[1], sum = 0, delta = 0x9e3779b9;
  for (int i = 0; i < 32; i++) {
    sum += delta;
    v0 += ((v1 << 4) + k[0]) ^ (v1 + sum) ^ ((v1 >> 5) + k[1]);
    v1 += ((v0 << 4) + k[2]) ^ (v0 + sum) ^ ((v0 >> 5) + k[3]);
  }
  v[0] = v0;
  v[1] = v1;
}

int main(void) {
  uint32_t v[2], k[4];
  while (scanf("%x %x %x %x %x %x", &v[0], &v[1], &k[0], &k[1], &k[2], &k[3]) == 6) {
    encrypt(v, k);
    printf("%08x %08x\n", v[0], v[1]);
  }
  return 0;
}
