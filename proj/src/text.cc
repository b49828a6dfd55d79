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

#include "ctwasm/text.h"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <unordered_map>

namespace ctwasm {

ParseError::ParseError(SourceSpan span, std::string message, std::vector<std::string> expected)
    : std::runtime_error(message), span_(span), message_(std::move(message)),
      expected_(std::move(expected)) {
  if (!expected_.empty()) {
    std::string full = message_ + " (expected ";
    for (size_t i = 0; i < expected_.size(); ++i) {
      if (i) full += i + 1 == expected_.size() ? " or " : ", ";
      full += expected_[i];
    }
    message_ = full + ")";
  }
}

std::string format_diagnostic(std::string_view file, const SourceSpan& span,
                              std::string_view message) {
  return std::string(file) + ":" + std::to_string(span.line) + ":" + std::to_string(span.column) +
         ": " + std::string(message);
}

namespace {

// ---------------------------------------------------------------------------
// Lexing into an s-expression tree

struct Node {
  enum Kind { List, Atom, String } kind = Atom;
  std::string_view text;  // raw atom text
  std::string str;        // decoded string literal
  std::vector<Node> kids;
  SourceSpan span;

  bool is_list() const { return kind == List; }
  bool is_atom() const { return kind == Atom; }
  bool is_string() const { return kind == String; }
  bool is_id() const { return kind == Atom && !text.empty() && text[0] == '$'; }
  bool is_keyword(std::string_view k) const { return kind == Atom && text == k; }
  // First element of a list when it is an atom.
  std::string_view head() const {
    return kind == List && !kids.empty() && kids[0].is_atom() ? kids[0].text : std::string_view{};
  }
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Node> parse_all() {
    std::vector<Node> out;
    skip();
    while (pos_ < src_.size()) {
      out.push_back(node());
      skip();
    }
    return out;
  }

 private:
  SourceSpan span_at(size_t start, size_t end) const {
    SourceSpan s;
    s.start = static_cast<uint32_t>(start);
    s.end = static_cast<uint32_t>(end);
    uint32_t line = 1;
    size_t line_start = 0;
    // Spans are only rendered on error, but every node carries one. Lines are
    // cached incrementally to keep this linear.
    if (start >= cache_pos_) {
      line = cache_line_;
      line_start = cache_line_start_;
      for (size_t i = cache_pos_; i < start; ++i)
        if (src_[i] == '\n') { ++line; line_start = i + 1; }
      cache_pos_ = start;
      cache_line_ = line;
      cache_line_start_ = line_start;
    } else {
      for (size_t i = 0; i < start; ++i)
        if (src_[i] == '\n') { ++line; line_start = i + 1; }
    }
    s.line = line;
    s.column = static_cast<uint32_t>(start - line_start + 1);
    return s;
  }

  [[noreturn]] void fail(size_t at, const std::string& msg, std::vector<std::string> expected = {}) {
    throw ParseError(span_at(at, at), msg, std::move(expected));
  }

  void skip() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos_;
      } else if (c == ';' && pos_ + 1 < src_.size() && src_[pos_ + 1] == ';') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '(' && pos_ + 1 < src_.size() && src_[pos_ + 1] == ';') {
        size_t start = pos_;
        int depth = 0;
        while (true) {
          if (pos_ + 1 >= src_.size()) fail(start, "unterminated block comment");
          if (src_[pos_] == '(' && src_[pos_ + 1] == ';') { ++depth; pos_ += 2; continue; }
          if (src_[pos_] == ';' && src_[pos_ + 1] == ')') {
            pos_ += 2;
            if (--depth == 0) break;
            continue;
          }
          ++pos_;
        }
      } else {
        break;
      }
    }
  }

  static bool atom_char(char c) {
    auto u = static_cast<unsigned char>(c);
    if (u <= 0x20 || u >= 0x7F) return false;
    return c != '(' && c != ')' && c != '"' && c != ';' && c != ',' && c != '[' && c != ']' &&
           c != '{' && c != '}';
  }

  Node node() {
    size_t start = pos_;
    char c = src_[pos_];
    Node n;
    if (c == '(') {
      ++pos_;
      n.kind = Node::List;
      skip();
      while (true) {
        if (pos_ >= src_.size()) fail(start, "unclosed parenthesis", {"')'"});
        if (src_[pos_] == ')') { ++pos_; break; }
        n.kids.push_back(node());
        skip();
      }
    } else if (c == ')') {
      fail(start, "unexpected ')'");
    } else if (c == '"') {
      n.kind = Node::String;
      n.str = string_literal();
    } else {
      while (pos_ < src_.size() && atom_char(src_[pos_])) ++pos_;
      if (pos_ == start) fail(start, "unexpected character");
      n.kind = Node::Atom;
      n.text = src_.substr(start, pos_ - start);
    }
    n.span = span_at(start, pos_);
    return n;
  }

  static int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  }

  std::string string_literal() {
    size_t start = pos_++;
    std::string out;
    while (true) {
      if (pos_ >= src_.size()) fail(start, "unterminated string");
      char c = src_[pos_++];
      if (c == '"') break;
      if (c == '\n') fail(pos_ - 1, "newline in string");
      if (c != '\\') { out += c; continue; }
      if (pos_ >= src_.size()) fail(start, "unterminated string");
      char e = src_[pos_++];
      switch (e) {
        case 't': out += '\t'; break;
        case 'n': out += '\n'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\'': out += '\''; break;
        case '\\': out += '\\'; break;
        case 'u': {
          if (pos_ >= src_.size() || src_[pos_] != '{') fail(pos_, "bad unicode escape");
          ++pos_;
          uint32_t cp = 0;
          size_t digits = 0;
          while (pos_ < src_.size() && hex_digit(src_[pos_]) >= 0) {
            cp = cp * 16 + hex_digit(src_[pos_++]);
            if (++digits > 6) fail(pos_, "bad unicode escape");
          }
          if (!digits || pos_ >= src_.size() || src_[pos_] != '}') fail(pos_, "bad unicode escape");
          ++pos_;
          if (cp > 0x10FFFF || (cp >= 0xD800 && cp < 0xE000)) fail(pos_, "bad unicode escape");
          if (cp < 0x80) {
            out += static_cast<char>(cp);
          } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
          } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
          } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
          }
          break;
        }
        default: {
          int h = hex_digit(e);
          int l = pos_ < src_.size() ? hex_digit(src_[pos_]) : -1;
          if (h < 0 || l < 0) fail(pos_ - 2, "unknown escape sequence");
          ++pos_;
          out += static_cast<char>(h * 16 + l);
        }
      }
    }
    return out;
  }

  std::string_view src_;
  size_t pos_ = 0;
  mutable size_t cache_pos_ = 0;
  mutable uint32_t cache_line_ = 1;
  mutable size_t cache_line_start_ = 0;
};

// ---------------------------------------------------------------------------
// Literals

[[noreturn]] void fail(const Node& n, const std::string& msg, std::vector<std::string> expected = {}) {
  throw ParseError(n.span, msg, std::move(expected));
}

// Strips underscores between digits; returns nullopt when misplaced.
std::optional<std::string> clean_digits(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '_') {
      if (i == 0 || i + 1 == s.size() || !std::isxdigit(static_cast<unsigned char>(s[i - 1])) ||
          !std::isxdigit(static_cast<unsigned char>(s[i + 1])))
        return std::nullopt;
      continue;
    }
    out += s[i];
  }
  return out;
}

// Parses an unsigned integer (decimal or 0x hex) with overflow detection.
std::optional<uint64_t> parse_nat(std::string_view s) {
  auto clean = clean_digits(s);
  if (!clean || clean->empty()) return std::nullopt;
  const std::string& t = *clean;
  uint64_t v = 0;
  if (t.size() > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) {
    for (size_t i = 2; i < t.size(); ++i) {
      char c = t[i];
      int d = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
              : (c >= 'a' && c <= 'f') ? c - 'a' + 10
              : (c >= 'A' && c <= 'F') ? c - 'A' + 10 : -1;
      if (d < 0 || v > (UINT64_MAX >> 4)) return std::nullopt;
      v = v * 16 + d;
    }
    return v;
  }
  for (char c : t) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    uint64_t d = c - '0';
    if (v > (UINT64_MAX - d) / 10) return std::nullopt;
    v = v * 10 + d;
  }
  return v;
}

uint32_t parse_u32(const Node& n) {
  if (!n.is_atom()) fail(n, "expected an integer", {"integer"});
  auto v = parse_nat(n.text);
  if (!v || *v > UINT32_MAX) fail(n, "invalid u32 literal '" + std::string(n.text) + "'", {"u32"});
  return static_cast<uint32_t>(*v);
}

// Integer constant of the given width; accepts signed and unsigned ranges.
uint64_t parse_int(const Node& n, unsigned bits) {
  if (!n.is_atom()) fail(n, "expected an integer literal", {"integer"});
  std::string_view s = n.text;
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  auto v = parse_nat(s);
  uint64_t umax = bits == 64 ? UINT64_MAX : (uint64_t{1} << bits) - 1;
  uint64_t nmax = uint64_t{1} << (bits - 1);
  if (!v || (neg ? *v > nmax : *v > umax))
    fail(n, "integer constant out of range '" + std::string(n.text) + "'");
  uint64_t r = neg ? (~*v + 1) : *v;
  return bits == 64 ? r : (r & umax);
}

template <typename F, typename U>
U parse_float_bits(const Node& n) {
  constexpr bool is32 = sizeof(F) == 4;
  constexpr unsigned mant = is32 ? 23 : 52;
  constexpr U exp_mask = is32 ? static_cast<U>(0x7F800000u) : static_cast<U>(0x7FF0000000000000ull);
  constexpr U sign_bit = U{1} << (is32 ? 31 : 63);
  constexpr U mant_mask = (U{1} << mant) - 1;
  if (!n.is_atom()) fail(n, "expected a float literal", {"float"});
  std::string_view s = n.text;
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  U sign = neg ? sign_bit : 0;
  if (s == "inf") return sign | exp_mask;
  if (s == "nan") return sign | exp_mask | (U{1} << (mant - 1));
  if (s.starts_with("nan:0x")) {
    auto payload = parse_nat(s.substr(4));
    if (!payload || *payload == 0 || *payload > mant_mask)
      fail(n, "invalid NaN payload '" + std::string(n.text) + "'");
    return sign | exp_mask | static_cast<U>(*payload);
  }
  auto clean = clean_digits(s);
  if (!clean || clean->empty() || !std::isdigit(static_cast<unsigned char>((*clean)[0])))
    fail(n, "invalid float literal '" + std::string(n.text) + "'");
  bool hex = clean->size() > 1 && (*clean)[1] == 'x';
  for (size_t i = hex ? 2 : 0; i < clean->size(); ++i) {
    char c = (*clean)[i];
    bool ok = std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-' ||
              (hex ? (std::isxdigit(static_cast<unsigned char>(c)) || c == 'p' || c == 'P')
                   : (c == 'e' || c == 'E'));
    if (!ok) fail(n, "invalid float literal '" + std::string(n.text) + "'");
  }
  std::string text = (neg ? "-" : "") + *clean;
  char* end = nullptr;
  errno = 0;
  F value;
  if constexpr (is32) value = std::strtof(text.c_str(), &end);
  else value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) fail(n, "invalid float literal '" + std::string(n.text) + "'");
  if (std::isinf(value)) fail(n, "constant out of range '" + std::string(n.text) + "'");
  return std::bit_cast<U>(value);
}

std::optional<ValType> valtype_keyword(std::string_view s) {
  if (s == "i32") return kI32;
  if (s == "i64") return kI64;
  if (s == "f32") return kF32;
  if (s == "f64") return kF64;
  if (s == "s32") return kS32;
  if (s == "s64") return kS64;
  return std::nullopt;
}

const std::vector<std::string> kValTypeNames = {"i32", "i64", "f32", "f64", "s32", "s64"};

ValType parse_valtype(const Node& n) {
  if (n.is_atom())
    if (auto t = valtype_keyword(n.text)) return *t;
  fail(n, "unknown type keyword '" + std::string(n.text) + "'", kValTypeNames);
}

// ---------------------------------------------------------------------------
// Mnemonics

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string secret_spelling(std::string_view name) {
  return replace_all(replace_all(std::string(name), "i32", "s32"), "i64", "s64");
}

// Rewrites `X.op_sx/SRC` and `X.op/SRC` to the current spelling.
std::string modern_conversion(std::string_view name) {
  size_t slash = name.find('/');
  if (slash == std::string_view::npos) return std::string(name);
  std::string head(name.substr(0, slash));
  std::string src(name.substr(slash + 1));
  for (std::string_view sx : {"_s", "_u"}) {
    if (head.ends_with(sx)) return head.substr(0, head.size() - 2) + "_" + src + std::string(sx);
  }
  return head + "_" + src;
}

struct OpLookup {
  const OpInfo* info = nullptr;
  Secrecy sec = Secrecy::Public;
};

OpLookup lookup_op(std::string_view raw) {
  static const std::unordered_map<std::string_view, std::string_view> legacy = {
      {"get_local", "local.get"},       {"set_local", "local.set"},
      {"tee_local", "local.tee"},       {"get_global", "global.get"},
      {"set_global", "global.set"},     {"current_memory", "memory.size"},
      {"grow_memory", "memory.grow"},   {"s32.classify", "s32.classify/i32"},
      {"s64.classify", "s64.classify/i64"}, {"i32.declassify", "i32.declassify/s32"},
      {"i64.declassify", "i64.declassify/s64"},
  };
  if (auto it = legacy.find(raw); it != legacy.end()) raw = it->second;
  if (const OpInfo* info = op_info_by_name(raw)) return {info, Secrecy::Public};
  std::string name = modern_conversion(raw);
  if (const OpInfo* info = op_info_by_name(name)) return {info, Secrecy::Public};
  if (name.find("s32") == std::string::npos && name.find("s64") == std::string::npos) return {};
  // Secret spelling: every integer type in the mnemonic carries the prefix.
  if (name.find("i32") != std::string::npos || name.find("i64") != std::string::npos) return {};
  std::string pub = replace_all(replace_all(name, "s32", "i32"), "s64", "i64");
  const OpInfo* info = op_info_by_name(pub);
  if (!info || !info->secret_capable) return {};
  return {info, Secrecy::Secret};
}

// ---------------------------------------------------------------------------
// Module construction

class Cursor {
 public:
  Cursor(const std::vector<Node>& items, size_t pos, const Node& owner)
      : items_(items), pos_(pos), owner_(owner) {}
  bool done() const { return pos_ >= items_.size(); }
  const Node* peek() const { return done() ? nullptr : &items_[pos_]; }
  const Node& next(std::vector<std::string> expected = {}) {
    if (done()) {
      SourceSpan s = owner_.span;
      s.start = s.end;
      throw ParseError(owner_.span, "unexpected end of list", std::move(expected));
    }
    return items_[pos_++];
  }
  bool peek_list(std::string_view head) const {
    const Node* n = peek();
    return n && n->is_list() && n->head() == head;
  }
  bool peek_keyword(std::string_view k) const {
    const Node* n = peek();
    return n && n->is_keyword(k);
  }
  bool peek_id() const {
    const Node* n = peek();
    return n && n->is_id();
  }
  const Node& owner() const { return owner_; }

 private:
  const std::vector<Node>& items_;
  size_t pos_;
  const Node& owner_;
};

struct NameSpace {
  std::unordered_map<std::string, uint32_t> names;
  uint32_t count = 0;

  void add(const Node* id, std::string_view what) {
    if (id) {
      std::string key(id->text);
      if (!names.emplace(key, count).second)
        fail(*id, "duplicate " + std::string(what) + " " + key);
    }
    ++count;
  }
};

struct TypeUse {
  std::optional<uint32_t> index;
  std::optional<Trust> trust;
  FuncType inline_type;
  bool has_inline = false;
  std::vector<std::string> param_names;
  const Node* at = nullptr;
};

class ModuleParser {
 public:
  Module run(const std::vector<Node>& top) {
    std::vector<const Node*> fields;
    const Node* root = nullptr;
    if (top.size() == 1 && top[0].head() == "module") {
      root = &top[0];
      size_t i = 1;
      if (i < root->kids.size() && root->kids[i].is_id()) ++i;
      for (; i < root->kids.size(); ++i) fields.push_back(&root->kids[i]);
    } else {
      for (const Node& n : top) fields.push_back(&n);
    }
    for (const Node* f : fields)
      if (!f->is_list() || f->head().empty())
        fail(*f, "expected a module field", {"'('"});

    collect(fields);
    for (const Node* f : fields) define(*f);
    return std::move(m_);
  }

 private:
  // Pass 1: names and explicit types.
  void collect(const std::vector<const Node*>& fields) {
    bool defined = false;
    for (const Node* f : fields) {
      std::string_view h = f->head();
      const Node* id = f->kids.size() > 1 && f->kids[1].is_id() ? &f->kids[1] : nullptr;
      if (h == "type") {
        types_.add(id, "type");
        Cursor c(f->kids, id ? 2 : 1, *f);
        const Node& fn = c.next({"(func ...)"});
        if (fn.head() != "func") fail(fn, "expected function type", {"(func ...)"});
        Cursor fc(fn.kids, 1, fn);
        FuncType ft;
        std::optional<Trust> trust = trust_keyword(fc);
        parse_signature(fc, ft, nullptr, false);
        if (!trust) trust = trust_keyword(fc);
        if (!fc.done()) fail(*fc.peek(), "unexpected token in function type");
        ft.trust = trust.value_or(Trust::Untrusted);
        if (!c.done()) fail(*c.peek(), "unexpected token in type definition");
        m_.types.push_back(std::move(ft));
        continue;
      }
      bool is_import = h == "import" || has_inline_import(*f);
      if (h == "func" || h == "table" || h == "memory" || h == "global") {
        if (is_import && defined) fail(*f, "import after definition");
        if (!is_import) defined = true;
        space(h).add(id, h);
      } else if (h == "import") {
        if (defined) fail(*f, "import after definition");
        if (f->kids.size() < 4 || !f->kids[3].is_list()) fail(*f, "malformed import");
        const Node& desc = f->kids[3];
        std::string_view k = desc.head();
        if (k != "func" && k != "table" && k != "memory" && k != "global")
          fail(desc, "unknown import kind", {"func", "table", "memory", "global"});
        const Node* did = desc.kids.size() > 1 && desc.kids[1].is_id() ? &desc.kids[1] : nullptr;
        space(k).add(did, k);
      } else if (h == "export" || h == "start" || h == "elem" || h == "data") {
        continue;
      } else {
        fail(*f, "unknown module field '" + std::string(h) + "'",
             {"type", "import", "func", "table", "memory", "global", "export", "start", "elem", "data"});
      }
    }
    if (funcs_.count > 0 || tables_.count > 1 || mems_.count > 1) {
      // Multiple tables/memories are reported by validation, not here.
    }
  }

  static bool has_inline_import(const Node& f) {
    for (size_t i = 1; i < f.kids.size(); ++i)
      if (f.kids[i].head() == "import") return true;
    return false;
  }

  NameSpace& space(std::string_view kind) {
    if (kind == "func") return funcs_;
    if (kind == "table") return tables_;
    if (kind == "memory") return mems_;
    return globals_;
  }

  uint32_t resolve(const NameSpace& ns, const Node& n, std::string_view what) {
    if (n.is_id()) {
      auto it = ns.names.find(std::string(n.text));
      if (it == ns.names.end()) fail(n, "unknown " + std::string(what) + " " + std::string(n.text));
      return it->second;
    }
    return parse_u32(n);
  }

  static std::optional<Trust> trust_keyword(Cursor& c) {
    if (c.peek_keyword("trusted")) { c.next(); return Trust::Trusted; }
    if (c.peek_keyword("untrusted")) { c.next(); return Trust::Untrusted; }
    return std::nullopt;
  }

  // (param ...)* (result ...)*
  void parse_signature(Cursor& c, FuncType& ft, std::vector<std::string>* names, bool allow_names) {
    while (c.peek_list("param")) {
      const Node& p = c.next();
      if (p.kids.size() >= 2 && p.kids[1].is_id()) {
        if (!allow_names) fail(p.kids[1], "unexpected parameter name");
        if (p.kids.size() != 3) fail(p, "named parameter takes exactly one type");
        ft.params.push_back(parse_valtype(p.kids[2]));
        if (names) names->emplace_back(p.kids[1].text);
        continue;
      }
      for (size_t i = 1; i < p.kids.size(); ++i) {
        ft.params.push_back(parse_valtype(p.kids[i]));
        if (names) names->emplace_back();
      }
    }
    while (c.peek_list("result")) {
      const Node& r = c.next();
      for (size_t i = 1; i < r.kids.size(); ++i) ft.results.push_back(parse_valtype(r.kids[i]));
      if (ft.results.size() > 1) fail(r, "multiple results are not supported");
    }
  }

  TypeUse parse_typeuse(Cursor& c, bool allow_names) {
    TypeUse u;
    u.at = c.peek() ? c.peek() : &c.owner();
    u.trust = trust_keyword(c);
    if (c.peek_list("type")) {
      const Node& t = c.next();
      if (t.kids.size() != 2) fail(t, "malformed type use");
      u.index = resolve_type(t.kids[1]);
    }
    size_t before_params = 0;
    (void)before_params;
    if (c.peek_list("param") || c.peek_list("result")) {
      u.has_inline = true;
      parse_signature(c, u.inline_type, &u.param_names, allow_names);
    }
    if (!u.trust) u.trust = trust_keyword(c);
    return u;
  }

  uint32_t resolve_type(const Node& n) {
    uint32_t idx = resolve(types_, n, "type");
    if (idx >= m_.types.size()) fail(n, "unknown type " + std::to_string(idx));
    return idx;
  }

  // Resolves a type use to an index, appending a new type when no existing
  // one matches.
  uint32_t finish_typeuse(TypeUse& u) {
    if (u.index) {
      const FuncType& ft = m_.types[*u.index];
      if (u.has_inline && (ft.params != u.inline_type.params || ft.results != u.inline_type.results))
        fail(*u.at, "inline function type does not match type " + std::to_string(*u.index));
      if (u.trust && *u.trust != ft.trust)
        fail(*u.at, "trust annotation does not match type " + std::to_string(*u.index));
      if (!u.has_inline) u.param_names.assign(ft.params.size(), "");
      return *u.index;
    }
    FuncType ft = u.inline_type;
    ft.trust = u.trust.value_or(Trust::Untrusted);
    for (size_t i = 0; i < m_.types.size(); ++i)
      if (m_.types[i] == ft) return static_cast<uint32_t>(i);
    m_.types.push_back(ft);
    return static_cast<uint32_t>(m_.types.size() - 1);
  }

  Limits parse_limits(Cursor& c) {
    Limits l;
    l.min = parse_u32(c.next({"limits"}));
    const Node* n = c.peek();
    if (n && n->is_atom() && !n->text.empty() && std::isdigit(static_cast<unsigned char>(n->text[0])))
      l.max = parse_u32(c.next());
    return l;
  }

  MemoryType parse_memtype(Cursor& c) {
    MemoryType mt;
    mt.limits = parse_limits(c);
    if (c.peek_keyword("secret")) { c.next(); mt.sec = Secrecy::Secret; }
    else if (c.peek_keyword("public")) { c.next(); }
    return mt;
  }

  TableType parse_tabletype(Cursor& c) {
    TableType tt;
    tt.limits = parse_limits(c);
    const Node& e = c.next({"funcref"});
    if (!e.is_keyword("funcref") && !e.is_keyword("anyfunc")) fail(e, "expected funcref", {"funcref"});
    return tt;
  }

  GlobalType parse_globaltype(Cursor& c) {
    const Node& n = c.next({"global type"});
    GlobalType gt;
    if (n.head() == "mut") {
      if (n.kids.size() != 2) fail(n, "malformed mutable global type");
      gt.type = parse_valtype(n.kids[1]);
      gt.mut = true;
    } else {
      gt.type = parse_valtype(n);
    }
    return gt;
  }

  // (export "name")* and an optional (import "m" "n") on an index space item.
  std::optional<std::pair<std::string, std::string>> inline_exports(Cursor& c, ExternKind kind,
                                                                    uint32_t index) {
    std::optional<std::pair<std::string, std::string>> imp;
    while (true) {
      if (c.peek_list("export")) {
        const Node& e = c.next();
        if (e.kids.size() != 2 || !e.kids[1].is_string()) fail(e, "malformed inline export");
        m_.exports.push_back(Export{e.kids[1].str, kind, index});
      } else if (c.peek_list("import") && !imp) {
        const Node& i = c.next();
        if (i.kids.size() != 3 || !i.kids[1].is_string() || !i.kids[2].is_string())
          fail(i, "malformed inline import");
        imp.emplace(i.kids[1].str, i.kids[2].str);
      } else {
        return imp;
      }
    }
  }

  void define(const Node& f) {
    std::string_view h = f.head();
    Cursor c(f.kids, 1, f);
    const Node* id = c.peek_id() ? &c.next() : nullptr;
    if (h == "type") return;
    if (h == "func") return define_func(f, c, id);
    if (h == "table") return define_table(f, c);
    if (h == "memory") return define_memory(f, c);
    if (h == "global") return define_global(f, c, id);
    if (h == "import") return define_import(f);
    if (h == "export") return define_export(f);
    if (h == "start") {
      if (m_.start) fail(f, "multiple start functions");
      if (f.kids.size() != 2) fail(f, "malformed start");
      m_.start = resolve(funcs_, f.kids[1], "function");
      return;
    }
    if (h == "elem") return define_elem(f);
    if (h == "data") return define_data(f);
  }

  void define_func(const Node& f, Cursor& c, const Node* id) {
    uint32_t index = func_index_++;
    auto imp = inline_exports(c, ExternKind::Func, index);
    TypeUse use = parse_typeuse(c, true);
    uint32_t type = finish_typeuse(use);
    std::optional<Trust> late_trust = trust_keyword(c);
    if (late_trust && *late_trust != m_.types[type].trust) {
      if (use.index || use.trust) fail(f, "conflicting trust annotation");
      FuncType ft = m_.types[type];
      ft.trust = *late_trust;
      use.trust = late_trust;
      use.inline_type = ft;
      use.has_inline = true;
      type = finish_typeuse(use);
    }
    if (imp) {
      if (!c.done()) fail(*c.peek(), "imported function has a body");
      Import i;
      i.module = imp->first;
      i.field = imp->second;
      i.kind = ExternKind::Func;
      i.type_index = type;
      i.debug.name = id ? std::string(id->text) : "";
      i.debug.span = f.span;
      m_.imports.push_back(std::move(i));
      return;
    }
    Function fn;
    fn.type_index = type;
    fn.debug.name = id ? std::string(id->text) : "";
    fn.debug.span = f.span;
    locals_.clear();
    fn.debug.local_names = use.param_names;
    for (size_t i = 0; i < use.param_names.size(); ++i)
      if (!use.param_names[i].empty() && !locals_.emplace(use.param_names[i], i).second)
        fail(f, "duplicate local " + use.param_names[i]);
    uint32_t nparams = static_cast<uint32_t>(m_.types[type].params.size());
    while (c.peek_list("local")) {
      const Node& l = c.next();
      if (l.kids.size() >= 2 && l.kids[1].is_id()) {
        if (l.kids.size() != 3) fail(l, "named local takes exactly one type");
        uint32_t idx = nparams + static_cast<uint32_t>(fn.locals.size());
        if (!locals_.emplace(std::string(l.kids[1].text), idx).second)
          fail(l.kids[1], "duplicate local " + std::string(l.kids[1].text));
        fn.locals.push_back(parse_valtype(l.kids[2]));
        fn.debug.local_names.emplace_back(l.kids[1].text);
        continue;
      }
      for (size_t i = 1; i < l.kids.size(); ++i) {
        fn.locals.push_back(parse_valtype(l.kids[i]));
        fn.debug.local_names.emplace_back();
      }
    }
    body_ = &fn.body;
    spans_ = &fn.debug.spans;
    labels_.clear();
    instrs(c);
    if (!labels_.empty()) fail(f, "unclosed block", {"end"});
    emit(Instr{Opcode::End}, f.span);
    m_.funcs.push_back(std::move(fn));
  }

  void define_table(const Node& f, Cursor& c) {
    uint32_t index = table_index_++;
    auto imp = inline_exports(c, ExternKind::Table, index);
    if (c.peek_keyword("funcref") || c.peek_keyword("anyfunc")) {
      c.next();
      if (imp) fail(f, "imported table with elements");
      const Node& e = c.next({"(elem ...)"});
      if (e.head() != "elem") fail(e, "expected (elem ...)", {"(elem ...)"});
      ElemSegment seg;
      seg.table = index;
      seg.offset.push_back(Instr{Opcode::I32Const});
      for (size_t i = 1; i < e.kids.size(); ++i) seg.funcs.push_back(resolve(funcs_, e.kids[i], "function"));
      auto n = static_cast<uint32_t>(seg.funcs.size());
      m_.tables.push_back(TableType{Limits{n, n}});
      m_.elems.push_back(std::move(seg));
      return;
    }
    TableType tt = parse_tabletype(c);
    if (!c.done()) fail(*c.peek(), "unexpected token in table");
    if (imp) {
      Import i;
      i.module = imp->first;
      i.field = imp->second;
      i.kind = ExternKind::Table;
      i.table = tt;
      m_.imports.push_back(std::move(i));
    } else {
      m_.tables.push_back(tt);
    }
  }

  void define_memory(const Node& f, Cursor& c) {
    uint32_t index = mem_index_++;
    auto imp = inline_exports(c, ExternKind::Memory, index);
    Secrecy sec = Secrecy::Public;
    if (c.peek_keyword("secret")) { c.next(); sec = Secrecy::Secret; }
    else if (c.peek_keyword("public")) { c.next(); }
    if (c.peek_list("data")) {
      if (imp) fail(f, "imported memory with data");
      const Node& d = c.next();
      DataSegment seg;
      seg.memory = index;
      seg.offset.push_back(Instr{Opcode::I32Const});
      for (size_t i = 1; i < d.kids.size(); ++i) {
        if (!d.kids[i].is_string()) fail(d.kids[i], "expected a string", {"string"});
        seg.bytes.insert(seg.bytes.end(), d.kids[i].str.begin(), d.kids[i].str.end());
      }
      auto pages = static_cast<uint32_t>((seg.bytes.size() + 65535) / 65536);
      MemoryType mt{Limits{pages, pages}, sec};
      if (c.peek_keyword("secret")) { c.next(); mt.sec = Secrecy::Secret; }
      m_.memories.push_back(mt);
      m_.data.push_back(std::move(seg));
      return;
    }
    MemoryType mt = parse_memtype(c);
    if (sec == Secrecy::Secret) mt.sec = Secrecy::Secret;
    if (!c.done()) fail(*c.peek(), "unexpected token in memory", {"secret", "public"});
    if (imp) {
      Import i;
      i.module = imp->first;
      i.field = imp->second;
      i.kind = ExternKind::Memory;
      i.memory = mt;
      m_.imports.push_back(std::move(i));
    } else {
      m_.memories.push_back(mt);
    }
  }

  void define_global(const Node& f, Cursor& c, const Node* id) {
    uint32_t index = global_index_++;
    auto imp = inline_exports(c, ExternKind::Global, index);
    GlobalType gt = parse_globaltype(c);
    if (imp) {
      if (!c.done()) fail(*c.peek(), "imported global has an initializer");
      Import i;
      i.module = imp->first;
      i.field = imp->second;
      i.kind = ExternKind::Global;
      i.global = gt;
      i.debug.name = id ? std::string(id->text) : "";
      m_.imports.push_back(std::move(i));
      return;
    }
    Global g;
    g.type = gt;
    g.debug.name = id ? std::string(id->text) : "";
    g.debug.span = f.span;
    g.init = const_expr(c);
    m_.globals.push_back(std::move(g));
  }

  void define_import(const Node& f) {
    const Node& desc = f.kids[3];
    if (!f.kids[1].is_string() || !f.kids[2].is_string()) fail(f, "malformed import", {"string"});
    if (f.kids.size() != 4) fail(f, "malformed import");
    Import i;
    i.module = f.kids[1].str;
    i.field = f.kids[2].str;
    i.debug.span = f.span;
    Cursor c(desc.kids, 1, desc);
    const Node* id = c.peek_id() ? &c.next() : nullptr;
    i.debug.name = id ? std::string(id->text) : "";
    std::string_view k = desc.head();
    if (k == "func") {
      ++func_index_;
      i.kind = ExternKind::Func;
      TypeUse use = parse_typeuse(c, true);
      i.type_index = finish_typeuse(use);
      if (auto late = trust_keyword(c); late && *late != m_.types[i.type_index].trust) {
        if (use.index || use.trust) fail(desc, "conflicting trust annotation");
        use.trust = late;
        use.has_inline = true;
        use.inline_type = m_.types[i.type_index];
        i.type_index = finish_typeuse(use);
      }
    } else if (k == "table") {
      ++table_index_;
      i.kind = ExternKind::Table;
      i.table = parse_tabletype(c);
    } else if (k == "memory") {
      ++mem_index_;
      i.kind = ExternKind::Memory;
      i.memory = parse_memtype(c);
    } else {
      ++global_index_;
      i.kind = ExternKind::Global;
      i.global = parse_globaltype(c);
    }
    if (!c.done()) fail(*c.peek(), "unexpected token in import");
    m_.imports.push_back(std::move(i));
  }

  void define_export(const Node& f) {
    if (f.kids.size() != 3 || !f.kids[1].is_string() || !f.kids[2].is_list() || f.kids[2].kids.size() != 2)
      fail(f, "malformed export");
    const Node& desc = f.kids[2];
    std::string_view k = desc.head();
    Export e;
    e.name = f.kids[1].str;
    if (k == "func") { e.kind = ExternKind::Func; e.index = resolve(funcs_, desc.kids[1], "function"); }
    else if (k == "table") { e.kind = ExternKind::Table; e.index = resolve(tables_, desc.kids[1], "table"); }
    else if (k == "memory") { e.kind = ExternKind::Memory; e.index = resolve(mems_, desc.kids[1], "memory"); }
    else if (k == "global") { e.kind = ExternKind::Global; e.index = resolve(globals_, desc.kids[1], "global"); }
    else fail(desc, "unknown export kind", {"func", "table", "memory", "global"});
    m_.exports.push_back(std::move(e));
  }

  Expr offset_expr(Cursor& c) {
    if (c.peek_list("offset")) {
      const Node& o = c.next();
      Cursor oc(o.kids, 1, o);
      return const_expr(oc);
    }
    const Node& n = c.next({"offset expression"});
    if (!n.is_list()) fail(n, "expected offset expression", {"(offset ...)"});
    std::vector<Node> one{n};
    Cursor oc(one, 0, n);
    return const_expr(oc);
  }

  void define_elem(const Node& f) {
    Cursor c(f.kids, 1, f);
    if (c.peek_id() && !tables_.names.count(std::string(c.peek()->text))) c.next();
    ElemSegment seg;
    if (c.peek_list("table")) {
      const Node& t = c.next();
      if (t.kids.size() != 2) fail(t, "malformed table use");
      seg.table = resolve(tables_, t.kids[1], "table");
    } else if (c.peek() && c.peek()->is_atom()) {
      seg.table = resolve(tables_, c.next(), "table");
    }
    seg.offset = offset_expr(c);
    if (c.peek_keyword("func")) c.next();
    while (!c.done()) seg.funcs.push_back(resolve(funcs_, c.next(), "function"));
    m_.elems.push_back(std::move(seg));
  }

  void define_data(const Node& f) {
    Cursor c(f.kids, 1, f);
    if (c.peek_id() && !mems_.names.count(std::string(c.peek()->text))) c.next();
    DataSegment seg;
    if (c.peek_list("memory")) {
      const Node& t = c.next();
      if (t.kids.size() != 2) fail(t, "malformed memory use");
      seg.memory = resolve(mems_, t.kids[1], "memory");
    } else if (c.peek() && c.peek()->is_atom()) {
      seg.memory = resolve(mems_, c.next(), "memory");
    }
    seg.offset = offset_expr(c);
    while (!c.done()) {
      const Node& s = c.next();
      if (!s.is_string()) fail(s, "expected a string", {"string"});
      seg.bytes.insert(seg.bytes.end(), s.str.begin(), s.str.end());
    }
    m_.data.push_back(std::move(seg));
  }

  // Constant expressions use the instruction grammar without locals.
  Expr const_expr(Cursor& c) {
    Expr out;
    std::vector<SourceSpan> spans;
    body_ = &out;
    spans_ = &spans;
    labels_.clear();
    locals_.clear();
    instrs(c);
    return out;
  }

  // -------------------------------------------------------------------------
  // Instructions

  void emit(Instr ins, const SourceSpan& span) {
    body_->push_back(std::move(ins));
    spans_->push_back(span);
  }

  void instrs(Cursor& c) {
    while (!c.done()) {
      const Node& n = *c.peek();
      if (n.is_list()) {
        c.next();
        folded(n);
      } else {
        plain(c);
      }
    }
  }

  std::optional<std::string> label_def(Cursor& c) {
    if (c.peek_id()) return std::string(c.next().text);
    return std::nullopt;
  }

  std::optional<ValType> block_type(Cursor& c) {
    std::optional<ValType> bt;
    if (c.peek_list("type")) {
      const Node& t = c.next();
      if (t.kids.size() != 2) fail(t, "malformed type use");
      const FuncType& ft = m_.types.at(resolve_type(t.kids[1]));
      if (!ft.params.empty()) fail(t, "block parameters are not supported");
      if (!ft.results.empty()) bt = ft.results[0];
    }
    while (c.peek_list("result")) {
      const Node& r = c.next();
      for (size_t i = 1; i < r.kids.size(); ++i) {
        if (bt) fail(r, "multiple block results are not supported");
        bt = parse_valtype(r.kids[i]);
      }
    }
    return bt;
  }

  uint32_t label_ref(const Node& n) {
    if (n.is_id()) {
      for (size_t i = labels_.size(); i-- > 0;)
        if (labels_[i] && *labels_[i] == n.text) return static_cast<uint32_t>(labels_.size() - 1 - i);
      fail(n, "unknown label " + std::string(n.text));
    }
    return parse_u32(n);
  }

  void end_label(Cursor& c, const std::optional<std::string>& label) {
    if (!c.peek_id()) return;
    const Node& id = c.next();
    if (!label || *label != id.text) fail(id, "mismatching label " + std::string(id.text));
  }

  static bool index_like(const Node* n) {
    return n && n->is_atom() && !n->text.empty() &&
           (n->text[0] == '$' || std::isdigit(static_cast<unsigned char>(n->text[0])));
  }

  // Reads the immediates of `info` from the cursor.
  Instr immediates(const OpInfo& info, Secrecy sec, Cursor& c, const Node& at) {
    Instr ins;
    ins.op = info.op;
    ins.sec = sec;
    switch (info.imm) {
      case ImmKind::None:
        if (info.op == Opcode::Select && c.peek_keyword("secret")) {
          c.next();
          ins.sec = Secrecy::Secret;
        }
        break;
      case ImmKind::BlockType: break;
      case ImmKind::Label: ins.index = label_ref(c.next({"label"})); break;
      case ImmKind::BrTable: {
        std::vector<uint32_t> all;
        while (index_like(c.peek())) all.push_back(label_ref(c.next()));
        if (all.empty()) fail(at, "br_table needs at least one label", {"label"});
        ins.index = all.back();
        all.pop_back();
        ins.targets = std::move(all);
        break;
      }
      case ImmKind::Func: ins.index = resolve(funcs_, c.next({"function index"}), "function"); break;
      case ImmKind::Local: {
        const Node& n = c.next({"local index"});
        if (n.is_id()) {
          auto it = locals_.find(std::string(n.text));
          if (it == locals_.end()) fail(n, "unknown local " + std::string(n.text));
          ins.index = it->second;
        } else {
          ins.index = parse_u32(n);
        }
        break;
      }
      case ImmKind::Global: ins.index = resolve(globals_, c.next({"global index"}), "global"); break;
      case ImmKind::CallIndirect: {
        if (index_like(c.peek())) {
          // Table index; only table 0 exists.
          uint32_t t = resolve(tables_, c.next(), "table");
          if (t != 0) fail(at, "call_indirect supports table 0 only");
        }
        TypeUse use = parse_typeuse(c, false);
        ins.index = finish_typeuse(use);
        break;
      }
      case ImmKind::MemArg: {
        const OpInfo& oi = info;
        ins.mem.align = oi.natural_align();
        if (c.peek() && c.peek()->is_atom() && c.peek()->text.starts_with("offset=")) {
          const Node& n = c.next();
          auto v = parse_nat(n.text.substr(7));
          if (!v || *v > UINT32_MAX) fail(n, "invalid offset");
          ins.mem.offset = static_cast<uint32_t>(*v);
        }
        if (c.peek() && c.peek()->is_atom() && c.peek()->text.starts_with("align=")) {
          const Node& n = c.next();
          auto v = parse_nat(n.text.substr(6));
          if (!v || *v == 0 || *v > UINT32_MAX || !std::has_single_bit(*v))
            fail(n, "alignment must be a power of two");
          ins.mem.align = static_cast<uint32_t>(std::countr_zero(*v));
        }
        break;
      }
      case ImmKind::MemoryIndex: break;
      case ImmKind::I32: ins.bits = parse_int(c.next({"i32 literal"}), 32); break;
      case ImmKind::I64: ins.bits = parse_int(c.next({"i64 literal"}), 64); break;
      case ImmKind::F32: ins.bits = parse_float_bits<float, uint32_t>(c.next({"f32 literal"})); break;
      case ImmKind::F64: ins.bits = parse_float_bits<double, uint64_t>(c.next({"f64 literal"})); break;
    }
    return ins;
  }

  const OpInfo& op_named(const Node& n, Secrecy& sec) {
    if (!n.is_atom()) fail(n, "expected an instruction", {"instruction"});
    OpLookup l = lookup_op(n.text);
    if (!l.info) fail(n, "unknown operator '" + std::string(n.text) + "'");
    sec = l.sec;
    return *l.info;
  }

  void plain(Cursor& c) {
    const Node& n = c.next();
    if (n.is_keyword("block") || n.is_keyword("loop") || n.is_keyword("if")) {
      auto label = label_def(c);
      Instr ins;
      ins.op = n.is_keyword("block") ? Opcode::Block : n.is_keyword("loop") ? Opcode::Loop : Opcode::If;
      ins.block_type = block_type(c);
      labels_.push_back(label);
      emit(std::move(ins), n.span);
      return;
    }
    if (n.is_keyword("else")) {
      if (labels_.empty()) fail(n, "else outside a block");
      end_label(c, labels_.back());
      emit(Instr{Opcode::Else}, n.span);
      return;
    }
    if (n.is_keyword("end")) {
      if (labels_.empty()) fail(n, "end outside a block");
      end_label(c, labels_.back());
      labels_.pop_back();
      emit(Instr{Opcode::End}, n.span);
      return;
    }
    Secrecy sec;
    const OpInfo& info = op_named(n, sec);
    emit(immediates(info, sec, c, n), n.span);
  }

  void folded(const Node& list) {
    if (list.kids.empty()) fail(list, "empty instruction", {"instruction"});
    const Node& head = list.kids[0];
    Cursor c(list.kids, 1, list);
    if (head.is_keyword("block") || head.is_keyword("loop")) {
      auto label = label_def(c);
      Instr ins;
      ins.op = head.is_keyword("block") ? Opcode::Block : Opcode::Loop;
      ins.block_type = block_type(c);
      emit(std::move(ins), list.span);
      labels_.push_back(label);
      instrs(c);
      labels_.pop_back();
      emit(Instr{Opcode::End}, list.span);
      return;
    }
    if (head.is_keyword("if")) {
      auto label = label_def(c);
      Instr ins;
      ins.op = Opcode::If;
      ins.block_type = block_type(c);
      while (!c.done() && !c.peek_list("then")) {
        const Node& cond = c.next();
        if (!cond.is_list()) fail(cond, "expected folded condition or (then ...)", {"(then ...)"});
        folded(cond);
      }
      const Node& then = c.next({"(then ...)"});
      emit(std::move(ins), list.span);
      labels_.push_back(label);
      Cursor tc(then.kids, 1, then);
      instrs(tc);
      if (c.peek_list("else")) {
        const Node& els = c.next();
        emit(Instr{Opcode::Else}, els.span);
        Cursor ec(els.kids, 1, els);
        instrs(ec);
      }
      if (!c.done()) fail(*c.peek(), "unexpected token after if branches");
      labels_.pop_back();
      emit(Instr{Opcode::End}, list.span);
      return;
    }
    Secrecy sec;
    const OpInfo& info = op_named(head, sec);
    if (info.cls == OpClass::Control && (info.op == Opcode::Else || info.op == Opcode::End))
      fail(head, "unexpected " + std::string(head.text));
    Instr ins = immediates(info, sec, c, head);
    while (!c.done()) {
      const Node& operand = c.next();
      if (!operand.is_list()) fail(operand, "expected folded operand", {"'('"});
      folded(operand);
    }
    emit(std::move(ins), list.span);
  }

  Module m_;
  NameSpace types_, funcs_, tables_, mems_, globals_;
  uint32_t func_index_ = 0, table_index_ = 0, mem_index_ = 0, global_index_ = 0;

  Expr* body_ = nullptr;
  std::vector<SourceSpan>* spans_ = nullptr;
  std::vector<std::optional<std::string>> labels_;
  std::unordered_map<std::string, uint32_t> locals_;
};

// ---------------------------------------------------------------------------
// Printing

std::string quote(std::string_view bytes) {
  static const char* hex = "0123456789abcdef";
  std::string out = "\"";
  for (char ch : bytes) {
    auto c = static_cast<unsigned char>(ch);
    if (c == '"' || c == '\\') {
      out += '\\';
      out += ch;
    } else if (c >= 0x20 && c < 0x7F) {
      out += ch;
    } else {
      out += '\\';
      out += hex[c >> 4];
      out += hex[c & 0xF];
    }
  }
  return out + "\"";
}

template <typename F, typename U>
std::string float_text(U bits) {
  constexpr bool is32 = sizeof(F) == 4;
  constexpr unsigned mant = is32 ? 23 : 52;
  constexpr U exp_mask = is32 ? static_cast<U>(0x7F800000u) : static_cast<U>(0x7FF0000000000000ull);
  constexpr U sign_bit = U{1} << (is32 ? 31 : 63);
  constexpr U mant_mask = (U{1} << mant) - 1;
  std::string sign = (bits & sign_bit) ? "-" : "";
  if ((bits & exp_mask) == exp_mask) {
    U payload = bits & mant_mask;
    if (payload == 0) return sign + "inf";
    if (payload == (U{1} << (mant - 1))) return sign + "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "nan:0x%llx", static_cast<unsigned long long>(payload));
    return sign + buf;
  }
  double v = std::bit_cast<F>(bits);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::string valtypes(std::string_view kw, const std::vector<ValType>& ts) {
  if (ts.empty()) return "";
  std::string out = " (" + std::string(kw);
  for (ValType t : ts) out += " " + to_string(t);
  return out + ")";
}

std::string limits_text(const Limits& l) {
  std::string out = std::to_string(l.min);
  if (l.max) out += " " + std::to_string(*l.max);
  return out;
}

std::string global_type_text(const GlobalType& gt) {
  return gt.mut ? "(mut " + to_string(gt.type) + ")" : to_string(gt.type);
}

std::string memtype_text(const MemoryType& mt) {
  return limits_text(mt.limits) + (mt.sec == Secrecy::Secret ? " secret" : "");
}

std::string signature(const Module& m, uint32_t type) {
  std::string out = " (type " + std::to_string(type) + ")";
  if (type < m.types.size()) {
    out += valtypes("param", m.types[type].params);
    out += valtypes("result", m.types[type].results);
  }
  return out;
}

std::string trust_text(const Module& m, uint32_t type) {
  return type < m.types.size() && m.types[type].trust == Trust::Trusted ? " trusted" : "";
}

std::string instr_text(const Instr& ins) {
  const OpInfo& info = op_info(ins.op);
  std::string out = instr_name(ins);
  switch (info.imm) {
    case ImmKind::None:
    case ImmKind::MemoryIndex: break;
    case ImmKind::BlockType:
      if (ins.block_type) out += " (result " + to_string(*ins.block_type) + ")";
      break;
    case ImmKind::Label:
    case ImmKind::Func:
    case ImmKind::Local:
    case ImmKind::Global: out += " " + std::to_string(ins.index); break;
    case ImmKind::BrTable:
      for (uint32_t t : ins.targets) out += " " + std::to_string(t);
      out += " " + std::to_string(ins.index);
      break;
    case ImmKind::CallIndirect: out += " (type " + std::to_string(ins.index) + ")"; break;
    case ImmKind::MemArg:
      if (ins.mem.offset) out += " offset=" + std::to_string(ins.mem.offset);
      if (ins.mem.align != info.natural_align())
        out += " align=" + std::to_string(uint64_t{1} << std::min<uint32_t>(ins.mem.align, 63));
      break;
    case ImmKind::I32: out += " " + std::to_string(static_cast<int32_t>(static_cast<uint32_t>(ins.bits))); break;
    case ImmKind::I64: out += " " + std::to_string(static_cast<int64_t>(ins.bits)); break;
    case ImmKind::F32: out += " " + float_text<float, uint32_t>(static_cast<uint32_t>(ins.bits)); break;
    case ImmKind::F64: out += " " + float_text<double, uint64_t>(ins.bits); break;
  }
  return out;
}

std::string const_expr_text(const Expr& e) {
  std::string out;
  for (const Instr& ins : e) {
    if (ins.op == Opcode::End) continue;
    if (!out.empty()) out += ' ';
    out += "(" + instr_text(ins) + ")";
  }
  return out;
}

void print_body(std::string& out, const Expr& body) {
  size_t n = body.size();
  if (n && body.back().op == Opcode::End) --n;
  int depth = 0;
  for (size_t i = 0; i < n; ++i) {
    const Instr& ins = body[i];
    if (ins.op == Opcode::End || ins.op == Opcode::Else) depth = std::max(0, depth - 1);
    out += "\n" + std::string(4 + 2 * depth, ' ') + instr_text(ins);
    if (ins.op == Opcode::Block || ins.op == Opcode::Loop || ins.op == Opcode::If ||
        ins.op == Opcode::Else)
      ++depth;
  }
}

}  // namespace

std::string instr_name(const Instr& ins) {
  const OpInfo& info = op_info(ins.op);
  if (ins.sec != Secrecy::Secret) return std::string(info.name);
  if (ins.op == Opcode::Select) return "select secret";
  return secret_spelling(info.name);
}

Module parse_module(std::string_view text) {
  Lexer lexer(text);
  std::vector<Node> top = lexer.parse_all();
  ModuleParser parser;
  return parser.run(top);
}

std::string print_module(const Module& m) {
  std::string out = "(module";
  for (size_t i = 0; i < m.types.size(); ++i) {
    const FuncType& ft = m.types[i];
    out += "\n  (type (;" + std::to_string(i) + ";) (func";
    if (ft.trust == Trust::Trusted) out += " trusted";
    out += valtypes("param", ft.params) + valtypes("result", ft.results) + "))";
  }
  uint32_t fi = 0, ti = 0, mi = 0, gi = 0;
  for (const Import& imp : m.imports) {
    out += "\n  (import " + quote(imp.module) + " " + quote(imp.field) + " ";
    switch (imp.kind) {
      case ExternKind::Func:
        out += "(func (;" + std::to_string(fi++) + ";)" + trust_text(m, imp.type_index) +
               signature(m, imp.type_index) + ")";
        break;
      case ExternKind::Table:
        out += "(table (;" + std::to_string(ti++) + ";) " + limits_text(imp.table.limits) + " funcref)";
        break;
      case ExternKind::Memory:
        out += "(memory (;" + std::to_string(mi++) + ";) " + memtype_text(imp.memory) + ")";
        break;
      case ExternKind::Global:
        out += "(global (;" + std::to_string(gi++) + ";) " + global_type_text(imp.global) + ")";
        break;
    }
    out += ")";
  }
  for (const Function& f : m.funcs) {
    out += "\n  (func (;" + std::to_string(fi++) + ";)" + trust_text(m, f.type_index) +
           signature(m, f.type_index);
    if (!f.locals.empty()) out += "\n   " + valtypes("local", f.locals);
    print_body(out, f.body);
    out += ")";
  }
  for (const TableType& t : m.tables)
    out += "\n  (table (;" + std::to_string(ti++) + ";) " + limits_text(t.limits) + " funcref)";
  for (const MemoryType& mt : m.memories)
    out += "\n  (memory (;" + std::to_string(mi++) + ";) " + memtype_text(mt) + ")";
  for (const Global& g : m.globals)
    out += "\n  (global (;" + std::to_string(gi++) + ";) " + global_type_text(g.type) + " " +
           const_expr_text(g.init) + ")";
  for (const Export& e : m.exports)
    out += "\n  (export " + quote(e.name) + " (" + std::string(to_string(e.kind)) + " " +
           std::to_string(e.index) + "))";
  if (m.start) out += "\n  (start " + std::to_string(*m.start) + ")";
  for (size_t i = 0; i < m.elems.size(); ++i) {
    const ElemSegment& e = m.elems[i];
    out += "\n  (elem (;" + std::to_string(i) + ";)";
    if (e.table) out += " " + std::to_string(e.table);
    out += " (offset " + const_expr_text(e.offset) + ")";
    for (uint32_t f : e.funcs) out += " " + std::to_string(f);
    out += ")";
  }
  for (size_t i = 0; i < m.data.size(); ++i) {
    const DataSegment& d = m.data[i];
    out += "\n  (data (;" + std::to_string(i) + ";)";
    if (d.memory) out += " " + std::to_string(d.memory);
    out += " (offset " + const_expr_text(d.offset) + ") " +
           quote(std::string_view(reinterpret_cast<const char*>(d.bytes.data()), d.bytes.size())) + ")";
  }
  return out + ")\n";
}

}  // namespace ctwasm
