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

#include "ctwasm/binary.h"

#include <array>
#include <cstring>

namespace ctwasm {

namespace {

constexpr std::array<uint8_t, 8> kHeader = {0x00, 0x61, 0x73, 0x6D, 0x01, 0x00, 0x00, 0x00};

enum SectionId : uint8_t {
  kCustom = 0, kType = 1, kImport = 2, kFunction = 3, kTable = 4, kMemory = 5,
  kGlobal = 6, kExport = 7, kStart = 8, kElem = 9, kCode = 10, kData = 11,
};

// ---------------------------------------------------------------------------
// Encoding

uint8_t valtype_code(ValType t) {
  switch (t.num) {
    case NumType::I32: return t.is_secret() ? encoding::kS32 : encoding::kI32;
    case NumType::I64: return t.is_secret() ? encoding::kS64 : encoding::kI64;
    case NumType::F32:
      if (t.is_secret()) throw EncodeError("f32 cannot be secret");
      return encoding::kF32;
    case NumType::F64:
      if (t.is_secret()) throw EncodeError("f64 cannot be secret");
      return encoding::kF64;
  }
  throw EncodeError("bad value type");
}

class Writer {
 public:
  std::vector<uint8_t> out;

  void byte(uint8_t b) { out.push_back(b); }
  void u32(uint32_t v) { write_uleb(out, v); }
  void bytes(std::span<const uint8_t> b) { out.insert(out.end(), b.begin(), b.end()); }
  void name(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  void valtype(ValType t) { byte(valtype_code(t)); }
  void limits(const Limits& l, uint8_t extra_flags = 0) {
    byte(static_cast<uint8_t>((l.max ? encoding::kLimitsHasMax : 0) | extra_flags));
    u32(l.min);
    if (l.max) u32(*l.max);
  }
  void memtype(const MemoryType& mt) {
    limits(mt.limits, mt.sec == Secrecy::Secret ? encoding::kLimitsSecret : 0);
  }
  void tabletype(const TableType& tt) {
    byte(encoding::kFuncRef);
    limits(tt.limits);
  }
  void globaltype(const GlobalType& gt) {
    valtype(gt.type);
    byte(gt.mut ? 1 : 0);
  }

  void instr(const Instr& ins) {
    const OpInfo& info = op_info(ins.op);
    auto code = static_cast<uint16_t>(ins.op);
    if (code > 0xFF) {
      byte(static_cast<uint8_t>(code >> 8));
      byte(static_cast<uint8_t>(code & 0xFF));
    } else {
      if (ins.sec == Secrecy::Secret) {
        if (!info.secret_capable)
          throw EncodeError(std::string(info.name) + " has no secret form");
        byte(kSecretPrefix);
      }
      byte(static_cast<uint8_t>(code));
    }
    switch (info.imm) {
      case ImmKind::None: break;
      case ImmKind::BlockType:
        if (ins.block_type) valtype(*ins.block_type);
        else byte(encoding::kEmptyBlock);
        break;
      case ImmKind::Label:
      case ImmKind::Func:
      case ImmKind::Local:
      case ImmKind::Global: u32(ins.index); break;
      case ImmKind::BrTable:
        u32(static_cast<uint32_t>(ins.targets.size()));
        for (uint32_t t : ins.targets) u32(t);
        u32(ins.index);
        break;
      case ImmKind::CallIndirect:
        u32(ins.index);
        // Trust flag, filled in by the caller that knows the type table.
        byte(0);
        break;
      case ImmKind::MemArg:
        u32(ins.mem.align);
        u32(ins.mem.offset);
        break;
      case ImmKind::MemoryIndex: byte(0); break;
      case ImmKind::I32: write_sleb(out, static_cast<int32_t>(static_cast<uint32_t>(ins.bits))); break;
      case ImmKind::I64: write_sleb(out, static_cast<int64_t>(ins.bits)); break;
      case ImmKind::F32:
        for (int i = 0; i < 4; ++i) byte(static_cast<uint8_t>(ins.bits >> (8 * i)));
        break;
      case ImmKind::F64:
        for (int i = 0; i < 8; ++i) byte(static_cast<uint8_t>(ins.bits >> (8 * i)));
        break;
    }
  }

  void expr(const Expr& e, const Module& m, bool terminate) {
    for (const Instr& ins : e) {
      instr(ins);
      if (ins.op == Opcode::CallIndirect && ins.index < m.types.size() &&
          m.types[ins.index].trust == Trust::Trusted)
        out.back() = encoding::kCallIndirectTrusted;
    }
    if (terminate) byte(static_cast<uint8_t>(Opcode::End));
  }
};

void emit_section(std::vector<uint8_t>& out, uint8_t id, const std::vector<uint8_t>& payload) {
  out.push_back(id);
  write_uleb(out, payload.size());
  out.insert(out.end(), payload.begin(), payload.end());
}

void emit_customs(std::vector<uint8_t>& out, const Module& m, uint8_t after) {
  for (const CustomSection& c : m.customs) {
    if (c.after != after) continue;
    Writer w;
    w.name(c.name);
    w.bytes(c.payload);
    emit_section(out, kCustom, w.out);
  }
}

// ---------------------------------------------------------------------------
// Decoding

class Reader {
 public:
  Reader(std::span<const uint8_t> data, size_t base) : data_(data), base_(base) {}

  size_t offset() const { return base_ + pos_; }
  bool done() const { return pos_ >= data_.size(); }
  size_t remaining() const { return data_.size() - pos_; }

  [[noreturn]] void fail(DecodeErrorCode code, const std::string& what) const {
    throw DecodeError(code, offset(), what);
  }

  uint8_t byte() {
    if (pos_ >= data_.size()) fail(DecodeErrorCode::UnexpectedEnd, "unexpected end of input");
    return data_[pos_++];
  }

  std::span<const uint8_t> take(size_t n) {
    if (n > remaining()) fail(DecodeErrorCode::UnexpectedEnd, "unexpected end of input");
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  uint64_t uleb(unsigned bits) {
    uint64_t result = 0;
    unsigned shift = 0;
    size_t start = offset();
    while (true) {
      uint8_t b = byte();
      uint64_t low = b & 0x7F;
      if (shift >= bits || (shift + 7 > bits && (low >> (bits - shift)) != 0))
        throw DecodeError(DecodeErrorCode::MalformedLeb, start, "integer representation too long");
      result |= low << shift;
      shift += 7;
      if (!(b & 0x80)) break;
    }
    return result;
  }

  int64_t sleb(unsigned bits) {
    uint64_t result = 0;
    unsigned shift = 0;
    size_t start = offset();
    uint8_t b = 0;
    while (true) {
      b = byte();
      if (shift + 7 >= bits) {
        // Final permitted byte: no continuation, and the unused high bits
        // must repeat the sign bit.
        unsigned used = bits - shift;
        int sign = (b >> (used - 1)) & 1;
        uint8_t high = static_cast<uint8_t>((b & 0x7F) >> used);
        uint8_t want = sign ? static_cast<uint8_t>(0x7F >> used) : 0;
        if ((b & 0x80) || high != want)
          throw DecodeError(DecodeErrorCode::MalformedLeb, start, "integer too large");
      }
      result |= static_cast<uint64_t>(b & 0x7F) << shift;
      shift += 7;
      if (!(b & 0x80)) break;
    }
    if (shift < 64 && (b & 0x40)) result |= ~uint64_t{0} << shift;
    if (bits == 32) return static_cast<int32_t>(static_cast<uint32_t>(result));
    return static_cast<int64_t>(result);
  }

  uint32_t u32() { return static_cast<uint32_t>(uleb(32)); }

  std::string name() {
    uint32_t len = u32();
    size_t at = offset();
    auto raw = take(len);
    std::string s(raw.begin(), raw.end());
    if (!valid_utf8(s)) throw DecodeError(DecodeErrorCode::MalformedUtf8, at, "malformed UTF-8 name");
    return s;
  }

  ValType valtype() {
    size_t at = offset();
    switch (byte()) {
      case encoding::kI32: return kI32;
      case encoding::kI64: return kI64;
      case encoding::kF32: return kF32;
      case encoding::kF64: return kF64;
      case encoding::kS32: return kS32;
      case encoding::kS64: return kS64;
      default: throw DecodeError(DecodeErrorCode::UnknownValType, at, "unknown value type");
    }
  }

  Limits limits(uint8_t* extra_flags, uint8_t allowed_extra) {
    size_t at = offset();
    uint8_t flags = byte();
    if (flags & ~(encoding::kLimitsHasMax | allowed_extra))
      throw DecodeError(DecodeErrorCode::MalformedLimits, at, "bad limits flags");
    Limits l;
    l.min = u32();
    if (flags & encoding::kLimitsHasMax) l.max = u32();
    if (extra_flags) *extra_flags = flags & allowed_extra;
    return l;
  }

  MemoryType memtype() {
    uint8_t extra = 0;
    MemoryType mt;
    mt.limits = limits(&extra, encoding::kLimitsSecret);
    mt.sec = (extra & encoding::kLimitsSecret) ? Secrecy::Secret : Secrecy::Public;
    return mt;
  }

  TableType tabletype() {
    size_t at = offset();
    if (byte() != encoding::kFuncRef)
      throw DecodeError(DecodeErrorCode::UnknownValType, at, "unknown table element type");
    return TableType{limits(nullptr, 0)};
  }

  GlobalType globaltype() {
    GlobalType gt;
    gt.type = valtype();
    size_t at = offset();
    uint8_t mut = byte();
    if (mut > 1) throw DecodeError(DecodeErrorCode::MalformedReserved, at, "bad mutability flag");
    gt.mut = mut == 1;
    return gt;
  }

  Instr instr(std::vector<uint8_t>* indirect_flags) {
    size_t at = offset();
    uint8_t b = byte();
    Instr ins;
    const OpInfo* info = nullptr;
    if (b == kSecretPrefix) {
      size_t payload_at = offset();
      uint8_t p = byte();
      info = secret_op_info_by_byte(p);
      if (!info)
        throw DecodeError(DecodeErrorCode::UnknownSecretOpcode, payload_at,
                          "unknown secret opcode payload 0x" + hex(p));
      if (static_cast<uint16_t>(info->op) < 0x100) ins.sec = Secrecy::Secret;
    } else {
      info = op_info_by_byte(b);
      if (!info) throw DecodeError(DecodeErrorCode::UnknownOpcode, at, "unknown opcode 0x" + hex(b));
    }
    ins.op = info->op;
    switch (info->imm) {
      case ImmKind::None: break;
      case ImmKind::BlockType: {
        size_t bt_at = offset();
        uint8_t bt = byte();
        if (bt != encoding::kEmptyBlock) {
          pos_--;
          (void)bt_at;
          ins.block_type = valtype();
        }
        break;
      }
      case ImmKind::Label:
      case ImmKind::Func:
      case ImmKind::Local:
      case ImmKind::Global: ins.index = u32(); break;
      case ImmKind::BrTable: {
        uint32_t n = u32();
        if (n > remaining()) fail(DecodeErrorCode::UnexpectedEnd, "br_table target count too large");
        ins.targets.reserve(n);
        for (uint32_t i = 0; i < n; ++i) ins.targets.push_back(u32());
        ins.index = u32();
        break;
      }
      case ImmKind::CallIndirect: {
        ins.index = u32();
        size_t flag_at = offset();
        uint8_t flag = byte();
        if (flag > encoding::kCallIndirectTrusted)
          throw DecodeError(DecodeErrorCode::MalformedReserved, flag_at, "bad call_indirect flag");
        if (indirect_flags) indirect_flags->push_back(flag);
        break;
      }
      case ImmKind::MemArg:
        ins.mem.align = u32();
        ins.mem.offset = u32();
        break;
      case ImmKind::MemoryIndex: {
        size_t r_at = offset();
        if (byte() != 0) throw DecodeError(DecodeErrorCode::MalformedReserved, r_at, "zero byte expected");
        break;
      }
      case ImmKind::I32: ins.bits = static_cast<uint32_t>(static_cast<int32_t>(sleb(32))); break;
      case ImmKind::I64: ins.bits = static_cast<uint64_t>(sleb(64)); break;
      case ImmKind::F32: {
        auto raw = take(4);
        for (int i = 0; i < 4; ++i) ins.bits |= static_cast<uint64_t>(raw[i]) << (8 * i);
        break;
      }
      case ImmKind::F64: {
        auto raw = take(8);
        for (int i = 0; i < 8; ++i) ins.bits |= static_cast<uint64_t>(raw[i]) << (8 * i);
        break;
      }
    }
    return ins;
  }

  // Reads instructions up to and including the `end` that closes depth 0.
  Expr expr(bool keep_end, std::vector<std::pair<size_t, uint8_t>>* indirect) {
    Expr out;
    int depth = 0;
    while (true) {
      std::vector<uint8_t> flags;
      Instr ins = instr(&flags);
      if (indirect && !flags.empty()) indirect->emplace_back(out.size(), flags.front());
      switch (ins.op) {
        case Opcode::Block:
        case Opcode::Loop:
        case Opcode::If: ++depth; break;
        case Opcode::End: --depth; break;
        default: break;
      }
      if (depth < 0) {
        if (keep_end) out.push_back(std::move(ins));
        return out;
      }
      out.push_back(std::move(ins));
    }
  }

  static std::string hex(uint8_t b) {
    static const char* digits = "0123456789abcdef";
    return {digits[b >> 4], digits[b & 0xF]};
  }

  static bool valid_utf8(const std::string& s) {
    size_t i = 0;
    while (i < s.size()) {
      auto c = static_cast<uint8_t>(s[i]);
      size_t n = 0;
      uint32_t cp = 0;
      if (c < 0x80) { ++i; continue; }
      if ((c & 0xE0) == 0xC0) { n = 1; cp = c & 0x1F; }
      else if ((c & 0xF0) == 0xE0) { n = 2; cp = c & 0x0F; }
      else if ((c & 0xF8) == 0xF0) { n = 3; cp = c & 0x07; }
      else return false;
      for (size_t k = 1; k <= n; ++k) {
        if (i + k >= s.size()) return false;
        auto cc = static_cast<uint8_t>(s[i + k]);
        if ((cc & 0xC0) != 0x80) return false;
        cp = (cp << 6) | (cc & 0x3F);
      }
      if ((n == 1 && cp < 0x80) || (n == 2 && cp < 0x800) || (n == 3 && cp < 0x10000) ||
          cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
        return false;
      i += n + 1;
    }
    return true;
  }

 private:
  std::span<const uint8_t> data_;
  size_t base_;
  size_t pos_ = 0;
};

void check_indirect_flags(const Module& m, const Expr& body,
                          const std::vector<std::pair<size_t, uint8_t>>& flags, size_t at) {
  for (auto [pos, flag] : flags) {
    uint32_t type = body[pos].index;
    if (type >= m.types.size()) continue;  // reported by validation
    bool trusted = m.types[type].trust == Trust::Trusted;
    if (trusted != (flag == encoding::kCallIndirectTrusted))
      throw DecodeError(DecodeErrorCode::MalformedReserved, at,
                        "call_indirect trust flag disagrees with its type");
  }
}

}  // namespace

std::string_view to_string(DecodeErrorCode code) {
  switch (code) {
    case DecodeErrorCode::BadMagic: return "BadMagic";
    case DecodeErrorCode::BadVersion: return "BadVersion";
    case DecodeErrorCode::UnexpectedEnd: return "UnexpectedEnd";
    case DecodeErrorCode::MalformedLeb: return "MalformedLeb";
    case DecodeErrorCode::SectionOrder: return "SectionOrder";
    case DecodeErrorCode::UnknownSection: return "UnknownSection";
    case DecodeErrorCode::SectionSizeMismatch: return "SectionSizeMismatch";
    case DecodeErrorCode::UnknownOpcode: return "UnknownOpcode";
    case DecodeErrorCode::UnknownSecretOpcode: return "UnknownSecretOpcode";
    case DecodeErrorCode::UnknownValType: return "UnknownValType";
    case DecodeErrorCode::UnknownTypeForm: return "UnknownTypeForm";
    case DecodeErrorCode::MalformedLimits: return "MalformedLimits";
    case DecodeErrorCode::UnknownExternKind: return "UnknownExternKind";
    case DecodeErrorCode::MalformedReserved: return "MalformedReserved";
    case DecodeErrorCode::FunctionCodeMismatch: return "FunctionCodeMismatch";
    case DecodeErrorCode::MalformedUtf8: return "MalformedUtf8";
    case DecodeErrorCode::TooManyLocals: return "TooManyLocals";
    case DecodeErrorCode::ResultArity: return "ResultArity";
  }
  return "?";
}

DecodeError::DecodeError(DecodeErrorCode code, size_t offset, const std::string& what)
    : std::runtime_error(what), code_(code), offset_(offset) {}

void write_uleb(std::vector<uint8_t>& out, uint64_t value) {
  do {
    uint8_t b = value & 0x7F;
    value >>= 7;
    if (value) b |= 0x80;
    out.push_back(b);
  } while (value);
}

void write_sleb(std::vector<uint8_t>& out, int64_t value) {
  while (true) {
    uint8_t b = value & 0x7F;
    value >>= 7;
    bool done = (value == 0 && !(b & 0x40)) || (value == -1 && (b & 0x40));
    if (!done) b |= 0x80;
    out.push_back(b);
    if (done) break;
  }
}

std::vector<uint8_t> encode_module(const Module& m) {
  std::vector<uint8_t> out(kHeader.begin(), kHeader.end());
  emit_customs(out, m, 0);

  auto section = [&](uint8_t id, bool present, auto&& fill) {
    if (present) {
      Writer w;
      fill(w);
      emit_section(out, id, w.out);
    }
    emit_customs(out, m, id);
  };

  section(kType, !m.types.empty(), [&](Writer& w) {
    w.u32(static_cast<uint32_t>(m.types.size()));
    for (const FuncType& ft : m.types) {
      if (ft.results.size() > 1) throw EncodeError("function types return at most one value");
      w.byte(ft.trust == Trust::Trusted ? encoding::kFuncTrusted : encoding::kFuncUntrusted);
      w.u32(static_cast<uint32_t>(ft.params.size()));
      for (ValType t : ft.params) w.valtype(t);
      w.u32(static_cast<uint32_t>(ft.results.size()));
      for (ValType t : ft.results) w.valtype(t);
    }
  });
  section(kImport, !m.imports.empty(), [&](Writer& w) {
    w.u32(static_cast<uint32_t>(m.imports.size()));
    for (const Import& imp : m.imports) {
      w.name(imp.module);
      w.name(imp.field);
      w.byte(static_cast<uint8_t>(imp.kind));
      switch (imp.kind) {
        case ExternKind::Func: w.u32(imp.type_index); break;
        case ExternKind::Table: w.tabletype(imp.table); break;
        case ExternKind::Memory: w.memtype(imp.memory); break;
        case ExternKind::Global: w.globaltype(imp.global); break;
      }
    }
  });
  section(kFunction, !m.funcs.empty(), [&](Writer& w) {
    w.u32(static_cast<uint32_t>(m.funcs.size()));
    for (const Function& f : m.funcs) w.u32(f.type_index);
  });
  section(kTable, !m.tables.empty(), [&](Writer& w) {
    w.u32(static_cast<uint32_t>(m.tables.size()));
    for (const TableType& t : m.tables) w.tabletype(t);
  });
  section(kMemory, !m.memories.empty(), [&](Writer& w) {
    w.u32(static_cast<uint32_t>(m.memories.size()));
    for (const MemoryType& mt : m.memories) w.memtype(mt);
  });
  section(kGlobal, !m.globals.empty(), [&](Writer& w) {
    w.u32(static_cast<uint32_t>(m.globals.size()));
    for (const Global& g : m.globals) {
      w.globaltype(g.type);
      w.expr(g.init, m, true);
    }
  });
  section(kExport, !m.exports.empty(), [&](Writer& w) {
    w.u32(static_cast<uint32_t>(m.exports.size()));
    for (const Export& e : m.exports) {
      w.name(e.name);
      w.byte(static_cast<uint8_t>(e.kind));
      w.u32(e.index);
    }
  });
  section(kStart, m.start.has_value(), [&](Writer& w) { w.u32(*m.start); });
  section(kElem, !m.elems.empty(), [&](Writer& w) {
    w.u32(static_cast<uint32_t>(m.elems.size()));
    for (const ElemSegment& e : m.elems) {
      w.u32(e.table);
      w.expr(e.offset, m, true);
      w.u32(static_cast<uint32_t>(e.funcs.size()));
      for (uint32_t f : e.funcs) w.u32(f);
    }
  });
  section(kCode, !m.funcs.empty(), [&](Writer& w) {
    w.u32(static_cast<uint32_t>(m.funcs.size()));
    for (const Function& f : m.funcs) {
      Writer body;
      std::vector<std::pair<ValType, uint32_t>> groups;
      for (ValType t : f.locals) {
        if (!groups.empty() && groups.back().first == t) ++groups.back().second;
        else groups.emplace_back(t, 1);
      }
      body.u32(static_cast<uint32_t>(groups.size()));
      for (auto [t, n] : groups) {
        body.u32(n);
        body.valtype(t);
      }
      bool has_end = !f.body.empty() && f.body.back().op == Opcode::End;
      body.expr(f.body, m, !has_end);
      w.u32(static_cast<uint32_t>(body.out.size()));
      w.bytes(body.out);
    }
  });
  section(kData, !m.data.empty(), [&](Writer& w) {
    w.u32(static_cast<uint32_t>(m.data.size()));
    for (const DataSegment& d : m.data) {
      w.u32(d.memory);
      w.expr(d.offset, m, true);
      w.u32(static_cast<uint32_t>(d.bytes.size()));
      w.bytes(d.bytes);
    }
  });
  return out;
}

Module decode_module(std::span<const uint8_t> bytes) {
  Module m;
  if (bytes.size() < 4 || !std::equal(kHeader.begin(), kHeader.begin() + 4, bytes.begin()))
    throw DecodeError(DecodeErrorCode::BadMagic, 0, "magic header not detected");
  if (bytes.size() < 8) throw DecodeError(DecodeErrorCode::UnexpectedEnd, bytes.size(), "unexpected end");
  if (!std::equal(kHeader.begin() + 4, kHeader.end(), bytes.begin() + 4))
    throw DecodeError(DecodeErrorCode::BadVersion, 4, "unknown binary version");

  Reader top(bytes.subspan(8), 8);
  uint8_t last_id = 0;
  std::vector<uint32_t> func_types;
  bool have_funcs = false;
  bool have_code = false;

  while (!top.done()) {
    size_t id_at = top.offset();
    uint8_t id = top.byte();
    uint32_t size = top.u32();
    size_t body_at = top.offset();
    auto payload = top.take(size);
    Reader r(payload, body_at);

    if (id == kCustom) {
      CustomSection c;
      c.name = r.name();
      auto rest = r.take(r.remaining());
      c.payload.assign(rest.begin(), rest.end());
      c.after = last_id;
      m.customs.push_back(std::move(c));
      continue;
    }
    if (id > kData) throw DecodeError(DecodeErrorCode::UnknownSection, id_at, "unknown section id");
    if (id <= last_id) throw DecodeError(DecodeErrorCode::SectionOrder, id_at, "section out of order");
    last_id = id;

    switch (id) {
      case kType: {
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) {
          size_t at = r.offset();
          uint8_t form = r.byte();
          FuncType ft;
          if (form == encoding::kFuncTrusted) ft.trust = Trust::Trusted;
          else if (form != encoding::kFuncUntrusted)
            throw DecodeError(DecodeErrorCode::UnknownTypeForm, at, "unknown type form");
          uint32_t np = r.u32();
          for (uint32_t k = 0; k < np; ++k) ft.params.push_back(r.valtype());
          size_t res_at = r.offset();
          uint32_t nr = r.u32();
          if (nr > 1) throw DecodeError(DecodeErrorCode::ResultArity, res_at, "too many results");
          for (uint32_t k = 0; k < nr; ++k) ft.results.push_back(r.valtype());
          m.types.push_back(std::move(ft));
        }
        break;
      }
      case kImport: {
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) {
          Import imp;
          imp.module = r.name();
          imp.field = r.name();
          size_t at = r.offset();
          uint8_t kind = r.byte();
          switch (kind) {
            case 0: imp.kind = ExternKind::Func; imp.type_index = r.u32(); break;
            case 1: imp.kind = ExternKind::Table; imp.table = r.tabletype(); break;
            case 2: imp.kind = ExternKind::Memory; imp.memory = r.memtype(); break;
            case 3: imp.kind = ExternKind::Global; imp.global = r.globaltype(); break;
            default: throw DecodeError(DecodeErrorCode::UnknownExternKind, at, "unknown import kind");
          }
          m.imports.push_back(std::move(imp));
        }
        break;
      }
      case kFunction: {
        have_funcs = true;
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) func_types.push_back(r.u32());
        break;
      }
      case kTable: {
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) m.tables.push_back(r.tabletype());
        break;
      }
      case kMemory: {
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) m.memories.push_back(r.memtype());
        break;
      }
      case kGlobal: {
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) {
          Global g;
          g.type = r.globaltype();
          g.init = r.expr(false, nullptr);
          m.globals.push_back(std::move(g));
        }
        break;
      }
      case kExport: {
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) {
          Export e;
          e.name = r.name();
          size_t at = r.offset();
          uint8_t kind = r.byte();
          if (kind > 3) throw DecodeError(DecodeErrorCode::UnknownExternKind, at, "unknown export kind");
          e.kind = static_cast<ExternKind>(kind);
          e.index = r.u32();
          m.exports.push_back(std::move(e));
        }
        break;
      }
      case kStart: m.start = r.u32(); break;
      case kElem: {
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) {
          ElemSegment e;
          e.table = r.u32();
          e.offset = r.expr(false, nullptr);
          uint32_t k = r.u32();
          if (k > r.remaining()) r.fail(DecodeErrorCode::UnexpectedEnd, "element count too large");
          for (uint32_t j = 0; j < k; ++j) e.funcs.push_back(r.u32());
          m.elems.push_back(std::move(e));
        }
        break;
      }
      case kCode: {
        have_code = true;
        size_t at = r.offset();
        uint32_t n = r.u32();
        if (n != func_types.size())
          throw DecodeError(DecodeErrorCode::FunctionCodeMismatch, at,
                            "function and code section have inconsistent lengths");
        for (uint32_t i = 0; i < n; ++i) {
          uint32_t body_size = r.u32();
          size_t fbody_at = r.offset();
          Reader fr(r.take(body_size), fbody_at);
          Function f;
          f.type_index = func_types[i];
          uint32_t groups = fr.u32();
          uint64_t total = 0;
          for (uint32_t g = 0; g < groups; ++g) {
            size_t gat = fr.offset();
            uint32_t count = fr.u32();
            total += count;
            if (total > 50000)
              throw DecodeError(DecodeErrorCode::TooManyLocals, gat, "too many locals");
            ValType t = fr.valtype();
            f.locals.insert(f.locals.end(), count, t);
          }
          std::vector<std::pair<size_t, uint8_t>> flags;
          f.body = fr.expr(true, &flags);
          if (!fr.done())
            throw DecodeError(DecodeErrorCode::SectionSizeMismatch, fr.offset(),
                              "function body size mismatch");
          m.funcs.push_back(std::move(f));
          check_indirect_flags(m, m.funcs.back().body, flags, fbody_at);
        }
        break;
      }
      case kData: {
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) {
          DataSegment d;
          d.memory = r.u32();
          d.offset = r.expr(false, nullptr);
          uint32_t len = r.u32();
          auto raw = r.take(len);
          d.bytes.assign(raw.begin(), raw.end());
          m.data.push_back(std::move(d));
        }
        break;
      }
      default: break;
    }
    if (!r.done())
      throw DecodeError(DecodeErrorCode::SectionSizeMismatch, r.offset(), "section size mismatch");
  }
  if (have_funcs && !func_types.empty() && !have_code)
    throw DecodeError(DecodeErrorCode::FunctionCodeMismatch, bytes.size(),
                      "function and code section have inconsistent lengths");
  return m;
}

}  // namespace ctwasm
