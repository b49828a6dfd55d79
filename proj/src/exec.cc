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

#include "ctwasm/exec.h"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include "ctwasm/text.h"

namespace ctwasm {

namespace {

constexpr uint32_t kPage = 65536;
constexpr uint32_t kNan32 = 0x7FC00000;
constexpr uint64_t kNan64 = 0x7FF8000000000000;

uint64_t fnv(uint64_t h, uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFF;
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr uint64_t kFnvBasis = 0xCBF29CE484222325ULL;

NumType num_of(OpType t) {
  switch (t) {
    case OpType::I64: return NumType::I64;
    case OpType::F32: return NumType::F32;
    case OpType::F64: return NumType::F64;
    default: return NumType::I32;
  }
}

uint64_t code_hash(const Module& m, const Function& f) {
  uint64_t h = kFnvBasis;
  h = fnv(h, f.type_index < m.types.size() ? m.types[f.type_index].params.size() : 0);
  for (ValType t : f.locals) h = fnv(h, static_cast<uint64_t>(t.num) * 2 + static_cast<uint64_t>(t.sec));
  for (const Instr& ins : f.body) {
    h = fnv(h, static_cast<uint64_t>(ins.op));
    h = fnv(h, static_cast<uint64_t>(ins.sec));
    h = fnv(h, ins.block_type ? 1 + static_cast<uint64_t>(ins.block_type->num) * 2 +
                                    static_cast<uint64_t>(ins.block_type->sec)
                              : 0);
    h = fnv(h, ins.index);
    h = fnv(h, (static_cast<uint64_t>(ins.mem.align) << 32) | ins.mem.offset);
    bool secret_const = op_info(ins.op).cls == OpClass::Const && ins.sec == Secrecy::Secret;
    h = fnv(h, secret_const ? 0 : ins.bits);
    for (uint32_t t : ins.targets) h = fnv(h, t);
  }
  return h;
}

CodeInfo compile(const Function& f) {
  CodeInfo ci;
  size_t n = f.body.size();
  ci.end.assign(n, static_cast<uint32_t>(n ? n - 1 : 0));
  ci.els.assign(n, static_cast<uint32_t>(n ? n - 1 : 0));
  std::vector<uint32_t> open;
  std::vector<uint32_t> else_of(n, UINT32_MAX);
  for (uint32_t i = 0; i < n; ++i) {
    switch (f.body[i].op) {
      case Opcode::Block:
      case Opcode::Loop:
      case Opcode::If: open.push_back(i); break;
      case Opcode::Else:
        if (!open.empty()) else_of[open.back()] = i;
        break;
      case Opcode::End:
        if (!open.empty()) {
          uint32_t o = open.back();
          open.pop_back();
          ci.end[o] = i;
          ci.els[o] = else_of[o] != UINT32_MAX ? else_of[o] : i;
          if (else_of[o] != UINT32_MAX) ci.end[else_of[o]] = i;
        }
        break;
      default: break;
    }
  }
  return ci;
}

Value make(ValType t, uint64_t bits) {
  if (t.num == NumType::I32 || t.num == NumType::F32) bits &= 0xFFFFFFFFu;
  return Value{t, bits};
}

float f32(uint64_t b) { return std::bit_cast<float>(static_cast<uint32_t>(b)); }
double f64(uint64_t b) { return std::bit_cast<double>(b); }
uint64_t bits32(float v) {
  if (std::isnan(v)) return kNan32;
  return std::bit_cast<uint32_t>(v);
}
uint64_t bits64(double v) {
  if (std::isnan(v)) return kNan64;
  return std::bit_cast<uint64_t>(v);
}

template <typename T>
T fmin_wasm(T a, T b) {
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<T>::quiet_NaN();
  if (a == 0 && b == 0) return std::signbit(a) ? a : b;
  return a < b ? a : b;
}
template <typename T>
T fmax_wasm(T a, T b) {
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<T>::quiet_NaN();
  if (a == 0 && b == 0) return std::signbit(a) ? b : a;
  return a > b ? a : b;
}

struct Trap {
  TrapKind kind;
};

// Float to integer truncation with the range checks of the base semantics.
uint64_t trunc_to_int(double x, bool is64, bool is_signed) {
  if (std::isnan(x)) throw Trap{TrapKind::InvalidConversion};
  double t = std::trunc(x);
  if (!is64 && is_signed) {
    if (!(t >= -2147483648.0 && t < 2147483648.0)) throw Trap{TrapKind::IntegerOverflow};
    return static_cast<uint32_t>(static_cast<int32_t>(t));
  }
  if (!is64) {
    if (!(t > -1.0 && t < 4294967296.0)) throw Trap{TrapKind::IntegerOverflow};
    return static_cast<uint32_t>(t);
  }
  if (is_signed) {
    if (!(t >= -9223372036854775808.0 && t < 9223372036854775808.0)) throw Trap{TrapKind::IntegerOverflow};
    return static_cast<uint64_t>(static_cast<int64_t>(t));
  }
  if (!(t > -1.0 && t < 18446744073709551616.0)) throw Trap{TrapKind::IntegerOverflow};
  return static_cast<uint64_t>(t);
}

template <typename U>
uint64_t int_binop(Opcode base, U a, U b) {
  using S = std::make_signed_t<U>;
  constexpr unsigned bits = sizeof(U) * 8;
  switch (base) {
    case Opcode::I32Add: return U(a + b);
    case Opcode::I32Sub: return U(a - b);
    case Opcode::I32Mul: return U(a * b);
    case Opcode::I32DivS:
      if (b == 0) throw Trap{TrapKind::DivideByZero};
      if (S(a) == std::numeric_limits<S>::min() && S(b) == -1) throw Trap{TrapKind::IntegerOverflow};
      return U(S(a) / S(b));
    case Opcode::I32DivU:
      if (b == 0) throw Trap{TrapKind::DivideByZero};
      return U(a / b);
    case Opcode::I32RemS:
      if (b == 0) throw Trap{TrapKind::DivideByZero};
      if (S(b) == -1) return 0;
      return U(S(a) % S(b));
    case Opcode::I32RemU:
      if (b == 0) throw Trap{TrapKind::DivideByZero};
      return U(a % b);
    case Opcode::I32And: return U(a & b);
    case Opcode::I32Or: return U(a | b);
    case Opcode::I32Xor: return U(a ^ b);
    case Opcode::I32Shl: return U(a << (b % bits));
    case Opcode::I32ShrS: return U(S(a) >> (b % bits));
    case Opcode::I32ShrU: return U(a >> (b % bits));
    case Opcode::I32Rotl: return std::rotl(a, static_cast<int>(b % bits));
    case Opcode::I32Rotr: return std::rotr(a, static_cast<int>(b % bits));
    default: return 0;
  }
}

template <typename U>
uint64_t int_relop(Opcode base, U a, U b) {
  using S = std::make_signed_t<U>;
  switch (base) {
    case Opcode::I32Eq: return a == b;
    case Opcode::I32Ne: return a != b;
    case Opcode::I32LtS: return S(a) < S(b);
    case Opcode::I32LtU: return a < b;
    case Opcode::I32GtS: return S(a) > S(b);
    case Opcode::I32GtU: return a > b;
    case Opcode::I32LeS: return S(a) <= S(b);
    case Opcode::I32LeU: return a <= b;
    case Opcode::I32GeS: return S(a) >= S(b);
    case Opcode::I32GeU: return a >= b;
    default: return 0;
  }
}

// Maps an i64 numeric opcode onto its i32 counterpart so both widths share
// one implementation.
Opcode as_i32_op(Opcode op) {
  auto c = static_cast<uint16_t>(op);
  if (c >= 0x51 && c <= 0x5A) return static_cast<Opcode>(c - 0x51 + 0x46);
  if (c >= 0x79 && c <= 0x8A) return static_cast<Opcode>(c - 0x79 + 0x67);
  return op;
}

template <typename F>
uint64_t float_bits(F v) {
  if constexpr (sizeof(F) == 4) return bits32(v);
  else return bits64(v);
}

template <typename F>
uint64_t float_unop(int k, F a) {
  // k: 0 abs 1 neg 2 ceil 3 floor 4 trunc 5 nearest 6 sqrt
  using U = std::conditional_t<sizeof(F) == 4, uint32_t, uint64_t>;
  constexpr U sign = U{1} << (sizeof(F) * 8 - 1);
  U raw = std::bit_cast<U>(a);
  switch (k) {
    case 0: return raw & ~sign;
    case 1: return raw ^ sign;
    case 2: return float_bits<F>(std::ceil(a));
    case 3: return float_bits<F>(std::floor(a));
    case 4: return float_bits<F>(std::trunc(a));
    case 5: return float_bits<F>(std::nearbyint(a));
    default: return float_bits<F>(std::sqrt(a));
  }
}

template <typename F>
uint64_t float_binop(int k, F a, F b) {
  // k: 0 add 1 sub 2 mul 3 div 4 min 5 max 6 copysign
  using U = std::conditional_t<sizeof(F) == 4, uint32_t, uint64_t>;
  constexpr U sign = U{1} << (sizeof(F) * 8 - 1);
  switch (k) {
    case 0: return float_bits<F>(a + b);
    case 1: return float_bits<F>(a - b);
    case 2: return float_bits<F>(a * b);
    case 3: return float_bits<F>(a / b);
    case 4: return float_bits<F>(fmin_wasm(a, b));
    case 5: return float_bits<F>(fmax_wasm(a, b));
    default: return (std::bit_cast<U>(a) & ~sign) | (std::bit_cast<U>(b) & sign);
  }
}

template <typename F>
uint64_t float_relop(int k, F a, F b) {
  switch (k) {
    case 0: return a == b;
    case 1: return a != b;
    case 2: return a < b;
    case 3: return a > b;
    case 4: return a <= b;
    default: return a >= b;
  }
}

uint64_t convert(Opcode op, uint64_t x) {
  switch (op) {
    case Opcode::I32WrapI64: return static_cast<uint32_t>(x);
    case Opcode::I64ExtendI32S: return static_cast<uint64_t>(static_cast<int64_t>(static_cast<int32_t>(x)));
    case Opcode::I64ExtendI32U: return static_cast<uint32_t>(x);
    case Opcode::I32TruncF32S: return trunc_to_int(f32(x), false, true);
    case Opcode::I32TruncF32U: return trunc_to_int(f32(x), false, false);
    case Opcode::I32TruncF64S: return trunc_to_int(f64(x), false, true);
    case Opcode::I32TruncF64U: return trunc_to_int(f64(x), false, false);
    case Opcode::I64TruncF32S: return trunc_to_int(f32(x), true, true);
    case Opcode::I64TruncF32U: return trunc_to_int(f32(x), true, false);
    case Opcode::I64TruncF64S: return trunc_to_int(f64(x), true, true);
    case Opcode::I64TruncF64U: return trunc_to_int(f64(x), true, false);
    case Opcode::F32ConvertI32S: return bits32(static_cast<float>(static_cast<int32_t>(x)));
    case Opcode::F32ConvertI32U: return bits32(static_cast<float>(static_cast<uint32_t>(x)));
    case Opcode::F32ConvertI64S: return bits32(static_cast<float>(static_cast<int64_t>(x)));
    case Opcode::F32ConvertI64U: return bits32(static_cast<float>(x));
    case Opcode::F32DemoteF64: return bits32(static_cast<float>(f64(x)));
    case Opcode::F64ConvertI32S: return bits64(static_cast<double>(static_cast<int32_t>(x)));
    case Opcode::F64ConvertI32U: return bits64(static_cast<double>(static_cast<uint32_t>(x)));
    case Opcode::F64ConvertI64S: return bits64(static_cast<double>(static_cast<int64_t>(x)));
    case Opcode::F64ConvertI64U: return bits64(static_cast<double>(x));
    case Opcode::F64PromoteF32: return bits64(static_cast<double>(f32(x)));
    case Opcode::I32ReinterpretF32:
    case Opcode::F32ReinterpretI32: return static_cast<uint32_t>(x);
    default: return x;  // i64/f64 reinterpret
  }
}

// Executes a numeric instruction; returns the result bits.
uint64_t numeric(Opcode op, const OpInfo& info, const Value* args) {
  auto c = static_cast<uint16_t>(op);
  switch (info.cls) {
    case OpClass::Testop: return args[0].bits == 0;
    case OpClass::Relop:
      if (info.type == OpType::I32) return int_relop<uint32_t>(op, args[0].u32(), args[1].u32());
      if (info.type == OpType::I64) return int_relop<uint64_t>(as_i32_op(op), args[0].bits, args[1].bits);
      if (info.type == OpType::F32) return float_relop(c - 0x5B, f32(args[0].bits), f32(args[1].bits));
      return float_relop(c - 0x61, f64(args[0].bits), f64(args[1].bits));
    case OpClass::Unop:
      if (info.type == OpType::I32 || info.type == OpType::I64) {
        bool w = info.type == OpType::I64;
        uint64_t x = args[0].bits;
        Opcode b = as_i32_op(op);
        if (b == Opcode::I32Clz) return w ? std::countl_zero(x) : std::countl_zero(static_cast<uint32_t>(x));
        if (b == Opcode::I32Ctz) return w ? std::countr_zero(x) : std::countr_zero(static_cast<uint32_t>(x));
        return w ? std::popcount(x) : std::popcount(static_cast<uint32_t>(x));
      }
      if (info.type == OpType::F32) return float_unop(c - 0x8B, f32(args[0].bits));
      return float_unop(c - 0x99, f64(args[0].bits));
    case OpClass::Binop:
      if (info.type == OpType::I32) return int_binop<uint32_t>(op, args[0].u32(), args[1].u32());
      if (info.type == OpType::I64) return int_binop<uint64_t>(as_i32_op(op), args[0].bits, args[1].bits);
      if (info.type == OpType::F32) return float_binop(c - 0x92, f32(args[0].bits), f32(args[1].bits));
      return float_binop(c - 0xA0, f64(args[0].bits), f64(args[1].bits));
    case OpClass::Convert: return convert(op, args[0].bits);
    default: return 0;
  }
}

bool is_division(const OpInfo& info) { return info.unsafe; }

}  // namespace

std::string to_string(const Value& v) {
  std::string t = to_string(v.type) + ":";
  switch (v.type.num) {
    case NumType::I32: return t + std::to_string(static_cast<int32_t>(v.u32()));
    case NumType::I64: return t + std::to_string(static_cast<int64_t>(v.bits));
    case NumType::F32: {
      char buf[48];
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(f32(v.bits)));
      return t + buf;
    }
    case NumType::F64: {
      char buf[48];
      std::snprintf(buf, sizeof buf, "%.17g", f64(v.bits));
      return t + buf;
    }
  }
  return t;
}

Value parse_value(std::string_view literal) {
  size_t colon = literal.find(':');
  if (colon == std::string_view::npos) throw InvokeError("argument '" + std::string(literal) + "' is not type:value");
  std::string type(literal.substr(0, colon));
  std::string text(literal.substr(colon + 1));
  ValType vt;
  if (type == "i32") vt = kI32;
  else if (type == "i64") vt = kI64;
  else if (type == "s32") vt = kS32;
  else if (type == "s64") vt = kS64;
  else if (type == "f32") vt = kF32;
  else if (type == "f64") vt = kF64;
  else throw InvokeError("unknown type '" + type + "' in argument '" + std::string(literal) + "'");
  try {
    size_t used = 0;
    if (is_int(vt.num)) {
      uint64_t bits;
      if (!text.empty() && text[0] == '-') bits = static_cast<uint64_t>(std::stoll(text, &used, 0));
      else bits = std::stoull(text, &used, 0);
      if (used != text.size()) throw std::invalid_argument("trailing");
      if (vt.num == NumType::I32) {
        bool neg = !text.empty() && text[0] == '-';
        if (neg ? static_cast<int64_t>(bits) < INT32_MIN : bits > UINT32_MAX)
          throw std::out_of_range("i32");
      }
      return make(vt, bits);
    }
    if (vt.num == NumType::F32) {
      float f = std::stof(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing");
      return Value{vt, std::bit_cast<uint32_t>(f)};
    }
    double d = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return Value{vt, std::bit_cast<uint64_t>(d)};
  } catch (const std::logic_error&) {
    throw InvokeError("malformed value in argument '" + std::string(literal) + "'");
  }
}

std::string_view to_string(TrapKind k) {
  switch (k) {
    case TrapKind::Unreachable: return "unreachable";
    case TrapKind::OutOfBounds: return "out of bounds memory access";
    case TrapKind::DivideByZero: return "integer divide by zero";
    case TrapKind::IntegerOverflow: return "integer overflow";
    case TrapKind::InvalidConversion: return "invalid conversion to integer";
    case TrapKind::IndirectCallFailure: return "indirect call failure";
    case TrapKind::StackExhaustion: return "call stack exhausted";
  }
  return "?";
}

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::SafeOp: return "SafeOp";
    case ActionKind::Branch: return "Branch";
    case ActionKind::SecretSelect: return "SecretSelect";
    case ActionKind::Mem: return "Mem";
    case ActionKind::UnsafeBinop: return "UnsafeBinop";
    case ActionKind::Grow: return "Grow";
    case ActionKind::Call: return "Call";
    case ActionKind::CallIndirect: return "CallIndirect";
    case ActionKind::Host: return "Host";
  }
  return "?";
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Running: return "running";
    case Status::Returned: return "returned";
    case Status::Trapped: return "trapped";
    case Status::FuelExhausted: return "fuel exhausted";
  }
  return "?";
}

std::string to_string(const Action& a) {
  std::string name = instr_name(Instr{a.op, a.sec});
  switch (a.kind) {
    case ActionKind::SafeOp: return "SafeOp{" + name + "}";
    case ActionKind::Branch: return "Branch{" + name + ", " + std::to_string(a.a) + "}";
    case ActionKind::SecretSelect: return "SecretSelect{}";
    case ActionKind::Mem: {
      std::string s = std::string("Mem{") + (a.store ? "store" : "load") + ", " + std::to_string(a.a) +
                      ", " + std::to_string(a.width);
      if (a.value) s += ", " + std::to_string(*a.value);
      return s + "}";
    }
    case ActionKind::UnsafeBinop:
      return "UnsafeBinop{" + name + ", " + std::to_string(a.a) + ", " + std::to_string(a.b) + "}";
    case ActionKind::Grow:
      return "Grow{" + std::to_string(a.a) + ", " + std::to_string(a.b) + ", " +
             std::to_string(static_cast<int32_t>(a.c)) + "}";
    case ActionKind::Call: return "Call{" + std::to_string(a.a) + "}";
    case ActionKind::CallIndirect: return "CallIndirect{" + std::to_string(a.a) + "}";
    case ActionKind::Host: {
      std::string s = "Host{" + std::to_string(a.a) + ", " + std::string(to_string(a.trust)) + ", [";
      for (size_t i = 0; i < a.args.size(); ++i) s += (i ? " " : "") + to_string(a.args[i]);
      s += "] -> [";
      for (size_t i = 0; i < a.results.size(); ++i) s += (i ? " " : "") + to_string(a.results[i]);
      return s + "]}";
    }
  }
  return "?";
}

uint32_t Store::add_host_func(HostFunc f) {
  FuncInst fi;
  fi.type = f.type;
  fi.instance = UINT32_MAX;
  fi.host = std::make_shared<const HostFunc>(std::move(f));
  funcs.push_back(std::move(fi));
  return static_cast<uint32_t>(funcs.size() - 1);
}

uint32_t Store::add_memory(MemInst m) {
  mems.push_back(std::move(m));
  return static_cast<uint32_t>(mems.size() - 1);
}

uint32_t Store::add_global(GlobalInst g) {
  globals.push_back(g);
  return static_cast<uint32_t>(globals.size() - 1);
}

Value project(const Value& v) {
  return sec_of(v.type) == Secrecy::Secret ? Value{v.type, 0} : v;
}

Store project(const Store& s) {
  Store out = s;
  for (MemInst& m : out.mems)
    if (m.sec == Secrecy::Secret) std::fill(m.bytes.begin(), m.bytes.end(), 0);
  for (GlobalInst& g : out.globals) g.value = project(g.value);
  return out;
}

uint64_t public_digest(const Store& s) {
  uint64_t h = kFnvBasis;
  for (const MemInst& m : s.mems) {
    h = fnv(h, static_cast<uint64_t>(m.sec));
    h = fnv(h, m.bytes.size());
    if (m.sec == Secrecy::Public)
      for (uint8_t b : m.bytes) h = (h ^ b) * 0x100000001B3ULL;
  }
  for (const GlobalInst& g : s.globals) {
    h = fnv(h, static_cast<uint64_t>(g.value.type.num) * 2 + static_cast<uint64_t>(g.value.type.sec));
    h = fnv(h, project(g.value).bits);
  }
  for (const TableInst& t : s.tables)
    for (auto e : t.elems) h = fnv(h, e ? *e + 1 : 0);
  return h;
}

std::optional<uint32_t> export_func(const Store& s, uint32_t instance, std::string_view name) {
  if (instance >= s.instances.size()) return std::nullopt;
  const ModuleInst& mi = s.instances[instance];
  auto it = mi.exports.find(name);
  if (it == mi.exports.end() || it->second.kind != ExternKind::Func) return std::nullopt;
  return it->second.addr;
}

namespace {

Value eval_const(const Store& store, const ModuleInst& mi, const Expr& e) {
  for (const Instr& ins : e) {
    const OpInfo& info = op_info(ins.op);
    if (info.cls == OpClass::Const) return make(typed(num_of(info.type), ins.sec), ins.bits);
    if (ins.op == Opcode::GlobalGet) return store.globals.at(mi.globals.at(ins.index)).value;
  }
  return Value{};
}

}  // namespace

uint32_t instantiate(Store& store, const Module& m, const Imports& imports, const ExecOptions& options) {
  return instantiate(store, std::make_shared<const Module>(m), imports, options, nullptr);
}

uint32_t instantiate(Store& store, std::shared_ptr<const Module> mp, const Imports& imports,
                     const ExecOptions& options, const TypedModule* typed) {
  const Module& m = *mp;
  auto inst_index = static_cast<uint32_t>(store.instances.size());
  ModuleInst mi;
  mi.module = mp;
  auto code = std::make_shared<std::vector<CodeInfo>>();
  for (size_t i = 0; i < m.funcs.size(); ++i) {
    code->push_back(compile(m.funcs[i]));
    if (typed && i < typed->funcs.size()) code->back().types = typed->funcs[i].pushed;
  }
  mi.code = code;

  // Resolve imports before touching the store so failures leave it unchanged.
  std::vector<uint32_t> import_addrs;
  for (const Import& imp : m.imports) {
    auto it = imports.find({imp.module, imp.field});
    std::string name = imp.module + "." + imp.field;
    if (it == imports.end()) throw InstantiateError(InstantiateError::UnknownImport, "unknown import " + name);
    const Extern& ext = it->second;
    if (ext.kind != imp.kind)
      throw InstantiateError(InstantiateError::ImportTypeMismatch, "import " + name + ": kind mismatch");
    switch (imp.kind) {
      case ExternKind::Func: {
        const FuncType& want = m.types.at(imp.type_index);
        if (ext.addr >= store.funcs.size() || store.funcs[ext.addr].type != want)
          throw InstantiateError(InstantiateError::ImportTypeMismatch,
                                 "import " + name + ": expected " + to_string(want) + ", found " +
                                     (ext.addr < store.funcs.size() ? to_string(store.funcs[ext.addr].type) : "?"));
        break;
      }
      case ExternKind::Memory: {
        const MemInst& mem = store.mems.at(ext.addr);
        if (mem.sec != imp.memory.sec || mem.pages() < imp.memory.limits.min ||
            (imp.memory.limits.max && mem.max_pages > *imp.memory.limits.max))
          throw InstantiateError(InstantiateError::ImportTypeMismatch, "import " + name + ": memory mismatch");
        break;
      }
      case ExternKind::Table: {
        const TableInst& t = store.tables.at(ext.addr);
        if (t.elems.size() < imp.table.limits.min)
          throw InstantiateError(InstantiateError::ImportTypeMismatch, "import " + name + ": table too small");
        break;
      }
      case ExternKind::Global:
        if (store.globals.at(ext.addr).type != imp.global)
          throw InstantiateError(InstantiateError::ImportTypeMismatch, "import " + name + ": global type mismatch");
        break;
    }
    import_addrs.push_back(ext.addr);
  }
  for (size_t i = 0; i < m.imports.size(); ++i) {
    switch (m.imports[i].kind) {
      case ExternKind::Func: mi.funcs.push_back(import_addrs[i]); break;
      case ExternKind::Table: mi.tables.push_back(import_addrs[i]); break;
      case ExternKind::Memory: mi.mems.push_back(import_addrs[i]); break;
      case ExternKind::Global: mi.globals.push_back(import_addrs[i]); break;
    }
  }

  // Evaluate segment offsets against the imported globals, then check bounds.
  Store& s = store;
  std::vector<uint32_t> new_tables_min;
  for (const TableType& t : m.tables) new_tables_min.push_back(t.limits.min);
  std::vector<std::pair<uint64_t, const ElemSegment*>> elem_offsets;
  for (const ElemSegment& e : m.elems) elem_offsets.emplace_back(eval_const(s, mi, e.offset).u32(), &e);
  std::vector<std::pair<uint64_t, const DataSegment*>> data_offsets;
  for (const DataSegment& d : m.data) data_offsets.emplace_back(eval_const(s, mi, d.offset).u32(), &d);

  uint32_t imported_funcs = m.num_imported(ExternKind::Func);
  for (uint32_t i = 0; i < m.funcs.size(); ++i) {
    FuncInst fi;
    fi.type = m.types.at(m.funcs[i].type_index);
    fi.instance = inst_index;
    fi.index = imported_funcs + i;
    fi.module = mp;
    fi.code_hash = code_hash(m, m.funcs[i]);
    mi.funcs.push_back(static_cast<uint32_t>(s.funcs.size()));
    s.funcs.push_back(std::move(fi));
  }
  for (const TableType& t : m.tables) {
    TableInst ti;
    ti.elems.resize(t.limits.min);
    ti.max = t.limits.max;
    mi.tables.push_back(static_cast<uint32_t>(s.tables.size()));
    s.tables.push_back(std::move(ti));
  }
  for (const MemoryType& mt : m.memories) {
    MemInst mem;
    mem.sec = mt.sec;
    mem.bytes.assign(static_cast<size_t>(mt.limits.min) * kPage, 0);
    uint32_t declared = mt.limits.max.value_or(65536);
    mem.max_pages = std::max(mt.limits.min, std::min(declared, options.max_pages));
    mi.mems.push_back(static_cast<uint32_t>(s.mems.size()));
    s.mems.push_back(std::move(mem));
  }
  for (const Global& g : m.globals) {
    Value v = eval_const(s, mi, g.init);
    v.type = g.type.type;
    mi.globals.push_back(static_cast<uint32_t>(s.globals.size()));
    s.globals.push_back(GlobalInst{g.type, v});
  }
  for (const Export& e : m.exports) {
    uint32_t addr = 0;
    switch (e.kind) {
      case ExternKind::Func: addr = mi.funcs.at(e.index); break;
      case ExternKind::Table: addr = mi.tables.at(e.index); break;
      case ExternKind::Memory: addr = mi.mems.at(e.index); break;
      case ExternKind::Global: addr = mi.globals.at(e.index); break;
    }
    mi.exports[e.name] = Extern{e.kind, addr};
  }
  for (auto& [off, e] : elem_offsets) {
    const TableInst& t = s.tables.at(mi.tables.at(e->table));
    if (off + e->funcs.size() > t.elems.size())
      throw InstantiateError(InstantiateError::ElemSegmentOutOfBounds, "elements segment does not fit");
  }
  for (auto& [off, d] : data_offsets) {
    const MemInst& mem = s.mems.at(mi.mems.at(d->memory));
    if (off + d->bytes.size() > mem.bytes.size())
      throw InstantiateError(InstantiateError::DataSegmentOutOfBounds, "data segment does not fit");
  }
  for (auto& [off, e] : elem_offsets) {
    TableInst& t = s.tables[mi.tables[e->table]];
    for (size_t k = 0; k < e->funcs.size(); ++k) t.elems[off + k] = mi.funcs.at(e->funcs[k]);
  }
  for (auto& [off, d] : data_offsets) {
    MemInst& mem = s.mems[mi.mems[d->memory]];
    std::copy(d->bytes.begin(), d->bytes.end(), mem.bytes.begin() + static_cast<ptrdiff_t>(off));
  }
  s.instances.push_back(std::move(mi));

  if (m.start) {
    uint32_t addr = s.instances[inst_index].funcs.at(*m.start);
    Config cfg = make_config(std::move(s), addr, {}, 100'000'000, options);
    while (!cfg.terminal()) step(cfg);
    s = std::move(cfg.store);
    if (cfg.status != Status::Returned)
      throw InstantiateError(InstantiateError::StartTrap, "start function did not return");
  }
  return inst_index;
}

namespace {

void enter(Config& cfg, uint32_t addr) {
  const FuncInst& fi = cfg.store.funcs.at(addr);
  if (fi.is_host()) {
    cfg.pending_host = addr;
    return;
  }
  if (cfg.frames.size() >= cfg.options.max_call_depth) {
    cfg.status = Status::Trapped;
    cfg.trap = TrapKind::StackExhaustion;
    return;
  }
  const Function& f = fi.module->funcs.at(fi.index - fi.module->num_imported(ExternKind::Func));
  Frame fr;
  fr.func = addr;
  size_t np = fi.type.params.size();
  fr.locals.assign(cfg.stack.end() - static_cast<ptrdiff_t>(np), cfg.stack.end());
  cfg.stack.resize(cfg.stack.size() - np);
  for (ValType t : f.locals) fr.locals.push_back(Value::zero(t));
  fr.base = cfg.stack.size();
  fr.arity = static_cast<uint32_t>(fi.type.results.size());
  fr.labels.push_back(Label{fr.arity, 0, fr.base, false});
  cfg.frames.push_back(std::move(fr));
}

void do_return(Config& cfg) {
  Frame& f = cfg.frames.back();
  std::vector<Value> vals(cfg.stack.end() - f.arity, cfg.stack.end());
  cfg.stack.resize(f.base);
  cfg.frames.pop_back();
  cfg.stack.insert(cfg.stack.end(), vals.begin(), vals.end());
  if (cfg.frames.empty()) {
    cfg.status = Status::Returned;
    cfg.results = cfg.stack;
  }
}

void branch(Config& cfg, uint32_t depth) {
  Frame& f = cfg.frames.back();
  size_t idx = f.labels.size() - 1 - depth;
  if (idx == 0) return do_return(cfg);
  Label l = f.labels[idx];
  uint32_t arity = l.loop ? 0 : l.arity;
  std::vector<Value> vals(cfg.stack.end() - arity, cfg.stack.end());
  cfg.stack.resize(l.height);
  cfg.stack.insert(cfg.stack.end(), vals.begin(), vals.end());
  f.labels.resize(l.loop ? idx + 1 : idx);
  f.pc = l.target;
}

Value pop(Config& cfg) {
  Value v = cfg.stack.back();
  cfg.stack.pop_back();
  return v;
}

Action host_step(Config& cfg) {
  uint32_t addr = *cfg.pending_host;
  cfg.pending_host.reset();
  const FuncInst& fi = cfg.store.funcs[addr];
  size_t np = fi.type.params.size();
  std::vector<Value> args(cfg.stack.end() - static_cast<ptrdiff_t>(np), cfg.stack.end());
  cfg.stack.resize(cfg.stack.size() - np);
  Action a;
  a.kind = ActionKind::Host;
  a.a = addr;
  a.trust = fi.type.trust;
  a.b = public_digest(cfg.store);
  HostCall call;
  std::optional<Store> projected;
  if (fi.type.trust == Trust::Untrusted) {
    for (Value& v : args) v = project(v);
    projected = project(cfg.store);
    call.store = &*projected;
  } else {
    call.store = &cfg.store;
  }
  call.args = args;
  std::vector<Value> results = fi.host->callback(call);
  if (results.size() != fi.type.results.size())
    throw InvokeError("host function returned the wrong number of results");
  for (size_t i = 0; i < results.size(); ++i)
    if (results[i].type != fi.type.results[i]) throw InvokeError("host function returned a mistyped result");
  cfg.stack.insert(cfg.stack.end(), results.begin(), results.end());
  a.args = args;
  a.results = results;
  if (fi.type.trust == Trust::Untrusted)
    for (Value& v : a.results) v = project(v);
  a.c = public_digest(cfg.store);
  if (cfg.frames.empty()) {
    cfg.status = Status::Returned;
    cfg.results = cfg.stack;
  }
  return a;
}

void trap(Config& cfg, TrapKind k) {
  cfg.status = Status::Trapped;
  cfg.trap = k;
}

}  // namespace

Config make_config(Store store, uint32_t func, const std::vector<Value>& args, uint64_t fuel,
                   const ExecOptions& options) {
  if (func >= store.funcs.size()) throw InvokeError("unknown function address");
  const FuncType& ft = store.funcs[func].type;
  if (args.size() != ft.params.size())
    throw InvokeError("expected " + std::to_string(ft.params.size()) + " arguments, got " +
                      std::to_string(args.size()));
  for (size_t i = 0; i < args.size(); ++i)
    if (args[i].type != ft.params[i])
      throw InvokeError("argument " + std::to_string(i) + " has type " + to_string(args[i].type) +
                        ", expected " + to_string(ft.params[i]));
  Config cfg;
  cfg.store = std::move(store);
  cfg.fuel = fuel;
  cfg.options = options;
  cfg.instance = cfg.store.funcs[func].instance;
  for (const Value& v : args) cfg.stack.push_back(make(v.type, v.bits));
  enter(cfg, func);
  if (fuel == 0 && !cfg.terminal()) cfg.status = Status::FuelExhausted;
  return cfg;
}

Config make_config(Store store, uint32_t instance, std::string_view export_name,
                   const std::vector<Value>& args, uint64_t fuel, const ExecOptions& options) {
  auto addr = export_func(store, instance, export_name);
  if (!addr) throw InvokeError("no exported function named '" + std::string(export_name) + "'");
  return make_config(std::move(store), *addr, args, fuel, options);
}

Action step(Config& cfg) {
  Action act;
  if (cfg.pending_host) {
    act = host_step(cfg);
  } else {
    Frame& f = cfg.frames.back();
    const FuncInst& fi = cfg.store.funcs[f.func];
    const ModuleInst& mi = cfg.store.instances[fi.instance];
    uint32_t local_index = fi.index - fi.module->num_imported(ExternKind::Func);
    const Function& fn = fi.module->funcs[local_index];
    const CodeInfo& ci = (*mi.code)[local_index];
    uint32_t pc = f.pc;
    const Instr& ins = fn.body[pc];
    const OpInfo& info = op_info(ins.op);
    act.op = ins.op;
    act.sec = ins.sec;
    try {
      switch (ins.op) {
        case Opcode::Unreachable: trap(cfg, TrapKind::Unreachable); break;
        case Opcode::Nop: ++f.pc; break;
        case Opcode::Block:
          f.labels.push_back(Label{ins.block_type ? 1u : 0u, ci.end[pc] + 1, cfg.stack.size(), false});
          ++f.pc;
          break;
        case Opcode::Loop:
          f.labels.push_back(Label{0, pc + 1, cfg.stack.size(), true});
          ++f.pc;
          break;
        case Opcode::If: {
          Value c = pop(cfg);
          act.kind = ActionKind::Branch;
          act.a = c.bits;
          uint32_t arity = ins.block_type ? 1u : 0u;
          if (c.bits != 0) {
            f.labels.push_back(Label{arity, ci.end[pc] + 1, cfg.stack.size(), false});
            ++f.pc;
          } else if (ci.els[pc] != ci.end[pc]) {
            f.labels.push_back(Label{arity, ci.end[pc] + 1, cfg.stack.size(), false});
            f.pc = ci.els[pc] + 1;
          } else {
            f.pc = ci.end[pc] + 1;
          }
          break;
        }
        case Opcode::Else:
          f.labels.pop_back();
          f.pc = ci.end[pc] + 1;
          break;
        case Opcode::End:
          if (f.labels.size() > 1) {
            f.labels.pop_back();
            ++f.pc;
          } else {
            do_return(cfg);
          }
          break;
        case Opcode::Br: branch(cfg, ins.index); break;
        case Opcode::BrIf: {
          Value c = pop(cfg);
          act.kind = ActionKind::Branch;
          act.a = c.bits;
          if (c.bits != 0) branch(cfg, ins.index);
          else ++f.pc;
          break;
        }
        case Opcode::BrTable: {
          Value c = pop(cfg);
          act.kind = ActionKind::Branch;
          act.a = c.bits;
          uint32_t target = c.u32() < ins.targets.size() ? ins.targets[c.u32()] : ins.index;
          branch(cfg, target);
          break;
        }
        case Opcode::Return: do_return(cfg); break;
        case Opcode::Call: {
          act.kind = ActionKind::Call;
          act.a = ins.index;
          ++f.pc;
          enter(cfg, mi.funcs.at(ins.index));
          break;
        }
        case Opcode::CallIndirect: {
          Value idx = pop(cfg);
          act.kind = ActionKind::CallIndirect;
          act.a = idx.bits;
          const TableInst& t = cfg.store.tables.at(mi.tables.at(0));
          if (idx.u32() >= t.elems.size() || !t.elems[idx.u32()]) throw Trap{TrapKind::IndirectCallFailure};
          uint32_t addr = *t.elems[idx.u32()];
          if (cfg.store.funcs[addr].type != fi.module->types.at(ins.index))
            throw Trap{TrapKind::IndirectCallFailure};
          ++f.pc;
          enter(cfg, addr);
          break;
        }
        case Opcode::Drop:
          pop(cfg);
          ++f.pc;
          break;
        case Opcode::Select: {
          Value c = pop(cfg);
          Value v2 = pop(cfg);
          Value v1 = pop(cfg);
          if (ins.sec == Secrecy::Secret) {
            act.kind = ActionKind::SecretSelect;
          } else {
            act.kind = ActionKind::Branch;
            act.a = c.bits;
          }
          cfg.stack.push_back(c.bits != 0 ? v1 : v2);
          ++f.pc;
          break;
        }
        case Opcode::LocalGet:
          cfg.stack.push_back(f.locals.at(ins.index));
          ++f.pc;
          break;
        case Opcode::LocalSet:
          f.locals.at(ins.index) = pop(cfg);
          ++f.pc;
          break;
        case Opcode::LocalTee:
          f.locals.at(ins.index) = cfg.stack.back();
          ++f.pc;
          break;
        case Opcode::GlobalGet:
          cfg.stack.push_back(cfg.store.globals.at(mi.globals.at(ins.index)).value);
          ++f.pc;
          break;
        case Opcode::GlobalSet:
          cfg.store.globals.at(mi.globals.at(ins.index)).value = pop(cfg);
          ++f.pc;
          break;
        case Opcode::MemorySize:
          cfg.stack.push_back(Value::i32(cfg.store.mems.at(mi.mems.at(0)).pages()));
          ++f.pc;
          break;
        case Opcode::MemoryGrow: {
          MemInst& mem = cfg.store.mems.at(mi.mems.at(0));
          Value d = pop(cfg);
          uint64_t old = mem.pages();
          uint64_t want = old + d.u32();
          uint32_t result = UINT32_MAX;
          if (want <= mem.max_pages) {
            mem.bytes.resize(want * kPage, 0);
            result = static_cast<uint32_t>(old);
          }
          act.kind = ActionKind::Grow;
          act.a = old;
          act.b = d.u32();
          act.c = result;
          cfg.stack.push_back(Value::i32(result));
          ++f.pc;
          break;
        }
        default: {
          switch (info.cls) {
            case OpClass::Load:
            case OpClass::Store: {
              MemInst& mem = cfg.store.mems.at(mi.mems.at(0));
              bool is_store = info.cls == OpClass::Store;
              Value v;
              if (is_store) v = pop(cfg);
              Value addr = pop(cfg);
              uint64_t ea = static_cast<uint64_t>(addr.u32()) + ins.mem.offset;
              act.kind = ActionKind::Mem;
              act.store = is_store;
              act.a = ea;
              act.width = info.access;
              ValType vt = typed(num_of(info.type), ins.sec);
              if (is_store && mem.sec == Secrecy::Public) act.value = v.bits & (info.access == 8 ? ~0ULL : ((1ULL << (8 * info.access)) - 1));
              if (ea + info.access > mem.bytes.size()) throw Trap{TrapKind::OutOfBounds};
              if (is_store) {
                uint64_t bits = v.bits;
                std::memcpy(mem.bytes.data() + ea, &bits, info.access);
              } else {
                uint64_t bits = 0;
                std::memcpy(&bits, mem.bytes.data() + ea, info.access);
                if (info.sign_extend) {
                  unsigned shift = 64 - 8 * info.access;
                  bits = static_cast<uint64_t>(static_cast<int64_t>(bits << shift) >> shift);
                }
                Value r = make(vt, bits);
                if (mem.sec == Secrecy::Public) act.value = r.bits;
                cfg.stack.push_back(r);
              }
              ++f.pc;
              break;
            }
            case OpClass::Const:
              cfg.stack.push_back(make(typed(num_of(info.type), ins.sec), ins.bits));
              ++f.pc;
              break;
            case OpClass::Classify:
            case OpClass::Declassify: {
              Value v = pop(cfg);
              v.type.sec = info.cls == OpClass::Classify ? Secrecy::Secret : Secrecy::Public;
              cfg.stack.push_back(v);
              ++f.pc;
              break;
            }
            default: {
              int arity = (info.cls == OpClass::Binop || info.cls == OpClass::Relop) ? 2 : 1;
              Value args[2];
              for (int i = arity; i-- > 0;) args[i] = pop(cfg);
              if (is_division(info)) {
                act.kind = ActionKind::UnsafeBinop;
                act.a = args[0].bits;
                act.b = args[1].bits;
              }
              uint64_t bits = numeric(ins.op, info, args);
              NumType rt = (info.cls == OpClass::Testop || info.cls == OpClass::Relop) ? NumType::I32
                                                                                     : num_of(info.type);
              cfg.stack.push_back(make(typed(rt, ins.sec), bits));
              ++f.pc;
              break;
            }
          }
        }
      }
    } catch (const Trap& t) {
      trap(cfg, t.kind);
    }
    if (cfg.options.check_types && cfg.status != Status::Trapped && pc < ci.types.size() && ci.types[pc] &&
        ins.op != Opcode::Call && ins.op != Opcode::CallIndirect && !cfg.stack.empty() &&
        cfg.stack.back().type != *ci.types[pc])
      ++cfg.type_violations;
  }
  ++cfg.steps;
  if (cfg.stack.size() > cfg.options.max_stack && !cfg.terminal()) trap(cfg, TrapKind::StackExhaustion);
  if (!cfg.terminal() && --cfg.fuel == 0) cfg.status = Status::FuelExhausted;
  return act;
}

InvokeResult invoke(Store& store, uint32_t instance, std::string_view export_name,
                    const std::vector<Value>& args, uint64_t fuel, bool record_trace,
                    const ExecOptions& options) {
  auto addr = export_func(store, instance, export_name);
  if (!addr) throw InvokeError("no exported function named '" + std::string(export_name) + "'");
  // Validate arguments before the store is moved into the configuration.
  const FuncType& ft = store.funcs[*addr].type;
  if (args.size() != ft.params.size())
    throw InvokeError("expected " + std::to_string(ft.params.size()) + " arguments, got " +
                      std::to_string(args.size()));
  for (size_t i = 0; i < args.size(); ++i)
    if (args[i].type != ft.params[i])
      throw InvokeError("argument " + std::to_string(i) + " has type " + to_string(args[i].type) +
                        ", expected " + to_string(ft.params[i]));
  Config cfg = make_config(std::move(store), *addr, args, fuel, options);
  InvokeResult r;
  while (!cfg.terminal()) {
    Action a = step(cfg);
    if (record_trace) r.trace.push_back(std::move(a));
  }
  store = std::move(cfg.store);
  r.status = cfg.status;
  r.trap = cfg.trap;
  r.results = cfg.results;
  r.steps = cfg.steps;
  r.type_violations = cfg.type_violations;
  return r;
}

}  // namespace ctwasm
