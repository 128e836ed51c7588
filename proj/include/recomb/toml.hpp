// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal TOML subset for run configuration files: tables, arrays of
// tables, and key = value pairs with strings, integers, floats, booleans
// and (possibly nested) single- or multi-line arrays. Dotted keys, inline
// tables and datetimes are out of scope and rejected with a line number.

#pragma once

#include <recomb/core.hpp>

#include <cctype>
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <variant>
#include <vector>

namespace recomb::toml {

class ConfigError : public Error {
 public:
  using Error::Error;
};

class Value;
using Array = std::vector<Value>;

struct Table {
  // insertion-ordered; configs are small enough for linear lookup
  std::vector<std::pair<std::string, Value>> entries;

  const Value* find(const std::string& key) const;
  Value* find(const std::string& key);
  Value& insert(const std::string& key);

  const Value& at(const std::string& key) const;
  bool contains(const std::string& key) const { return find(key) != nullptr; }

  // typed getters with defaults; missing-key and type errors name the key
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_array(const std::string& key,
                                       const std::vector<double>& fallback) const;
};

class Value {
 public:
  using Storage = std::variant<std::string, std::int64_t, double, bool, Array, Table>;
  Storage storage;

  Value() : storage(std::string{}) {}
  explicit Value(Storage s) : storage(std::move(s)) {}

  bool is_table() const { return std::holds_alternative<Table>(storage); }
  bool is_array() const { return std::holds_alternative<Array>(storage); }
  bool is_string() const { return std::holds_alternative<std::string>(storage); }

  const Table& table() const {
    if (!is_table()) throw ConfigError("value is not a table");
    return std::get<Table>(storage);
  }
  Table& table() {
    if (!is_table()) throw ConfigError("value is not a table");
    return std::get<Table>(storage);
  }
  const Array& array() const {
    if (!is_array()) throw ConfigError("value is not an array");
    return std::get<Array>(storage);
  }
  const std::string& string() const {
    if (!is_string()) throw ConfigError("value is not a string");
    return std::get<std::string>(storage);
  }
  double number() const {
    if (auto d = std::get_if<double>(&storage)) return *d;
    if (auto i = std::get_if<std::int64_t>(&storage)) return static_cast<double>(*i);
    throw ConfigError("value is not a number");
  }
  std::int64_t integer() const {
    if (auto i = std::get_if<std::int64_t>(&storage)) return *i;
    throw ConfigError("value is not an integer");
  }
  bool boolean() const {
    if (auto b = std::get_if<bool>(&storage)) return *b;
    throw ConfigError("value is not a boolean");
  }
};

inline const Value* Table::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

inline Value* Table::find(const std::string& key) {
  for (auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

inline Value& Table::insert(const std::string& key) {
  entries.emplace_back(key, Value{});
  return entries.back().second;
}

inline const Value& Table::at(const std::string& key) const {
  const Value* v = find(key);
  if (!v) throw ConfigError("missing required key '" + key + "'");
  return *v;
}

inline std::string Table::get_string(const std::string& key) const {
  const Value& v = at(key);
  if (!v.is_string()) throw ConfigError("key '" + key + "' must be a string");
  return v.string();
}
inline std::string Table::get_string(const std::string& key,
                                     const std::string& fallback) const {
  return contains(key) ? get_string(key) : fallback;
}
inline std::int64_t Table::get_int(const std::string& key) const {
  const Value& v = at(key);
  if (!std::holds_alternative<std::int64_t>(v.storage))
    throw ConfigError("key '" + key + "' must be an integer");
  return v.integer();
}
inline std::int64_t Table::get_int(const std::string& key, std::int64_t fallback) const {
  return contains(key) ? get_int(key) : fallback;
}
inline double Table::get_double(const std::string& key) const {
  const Value& v = at(key);
  if (!std::holds_alternative<double>(v.storage) &&
      !std::holds_alternative<std::int64_t>(v.storage))
    throw ConfigError("key '" + key + "' must be a number");
  return v.number();
}
inline double Table::get_double(const std::string& key, double fallback) const {
  return contains(key) ? get_double(key) : fallback;
}
inline bool Table::get_bool(const std::string& key, bool fallback) const {
  if (!contains(key)) return fallback;
  const Value& v = at(key);
  if (!std::holds_alternative<bool>(v.storage))
    throw ConfigError("key '" + key + "' must be a boolean");
  return v.boolean();
}
inline std::vector<double> Table::get_double_array(
    const std::string& key, const std::vector<double>& fallback) const {
  if (!contains(key)) return fallback;
  const Value* v = find(key);
  if (!v->is_array()) throw ConfigError("key '" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v->array()) out.push_back(e.number());
  return out;
}

// ----------------------------------------------------------------------------
// Parser
// ----------------------------------------------------------------------------

namespace detail {

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char take() {
    const char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }
  void skip_ws_inline() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) take();
  }
  // whitespace, newlines and comments
  void skip_ws_and_comments() {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        take();
      } else if (c == '#') {
        while (!eof() && peek() != '\n') take();
      } else {
        break;
      }
    }
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config parse error at line " + std::to_string(line) + ": " + what);
  }
};

inline std::string parse_key(Cursor& c) {
  c.skip_ws_inline();
  std::string key;
  if (!c.eof() && c.peek() == '"') {
    c.take();
    while (!c.eof() && c.peek() != '"') key += c.take();
    if (c.eof()) c.fail("unterminated quoted key");
    c.take();
    return key;
  }
  while (!c.eof()) {
    const char ch = c.peek();
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-') {
      key += c.take();
    } else {
      break;
    }
  }
  if (key.empty()) c.fail("expected a key");
  return key;
}

inline Value parse_value(Cursor& c);

inline Value parse_string(Cursor& c) {
  c.take();  // opening quote
  std::string s;
  while (!c.eof() && c.peek() != '"') {
    char ch = c.take();
    if (ch == '\\') {
      if (c.eof()) c.fail("unterminated string escape");
      const char esc = c.take();
      switch (esc) {
        case 'n': ch = '\n'; break;
        case 't': ch = '\t'; break;
        case 'r': ch = '\r'; break;
        case '"': ch = '"'; break;
        case '\\': ch = '\\'; break;
        default: c.fail(std::string("unsupported escape \\") + esc);
      }
    } else if (ch == '\n') {
      c.fail("newline inside string");
    }
    s += ch;
  }
  if (c.eof()) c.fail("unterminated string");
  c.take();  // closing quote
  return Value{Value::Storage{s}};
}

inline Value parse_array(Cursor& c) {
  c.take();  // '['
  Array arr;
  while (true) {
    c.skip_ws_and_comments();
    if (c.eof()) c.fail("unterminated array");
    if (c.peek() == ']') {
      c.take();
      break;
    }
    arr.push_back(parse_value(c));
    c.skip_ws_and_comments();
    if (c.eof()) c.fail("unterminated array");
    if (c.peek() == ',') {
      c.take();
    } else if (c.peek() != ']') {
      c.fail("expected ',' or ']' in array");
    }
  }
  return Value{Value::Storage{std::move(arr)}};
}

inline Value parse_scalar(Cursor& c) {
  std::string tok;
  while (!c.eof()) {
    const char ch = c.peek();
    if (ch == '\n' || ch == '#' || ch == ',' || ch == ']' || ch == ' ' || ch == '\t' ||
        ch == '\r')
      break;
    tok += c.take();
  }
  if (tok.empty()) c.fail("expected a value");
  if (tok == "true") return Value{Value::Storage{true}};
  if (tok == "false") return Value{Value::Storage{false}};

  std::string digits;  // underscores are allowed separators
  for (char ch : tok) {
    if (ch == '_') continue;
    digits += ch;
  }
  const bool looks_float = digits.find_first_of(".eE") != std::string::npos;
  errno = 0;
  char* end = nullptr;
  if (!looks_float) {
    const long long v = std::strtoll(digits.c_str(), &end, 10);
    if (end == digits.c_str() + digits.size())
      return Value{Value::Storage{static_cast<std::int64_t>(v)}};
  }
  const double d = std::strtod(digits.c_str(), &end);
  if (end != digits.c_str() + digits.size())
    c.fail("cannot parse value '" + tok + "'");
  return Value{Value::Storage{d}};
}

inline Value parse_value(Cursor& c) {
  c.skip_ws_inline();
  if (c.eof()) c.fail("expected a value");
  const char ch = c.peek();
  if (ch == '"') return parse_string(c);
  if (ch == '[') return parse_array(c);
  if (ch == '{') c.fail("inline tables are not supported");
  return parse_scalar(c);
}

inline void expect_line_end(Cursor& c) {
  c.skip_ws_inline();
  if (c.eof()) return;
  if (c.peek() == '#') {
    while (!c.eof() && c.peek() != '\n') c.take();
  }
  if (!c.eof() && c.peek() != '\n') c.fail("unexpected trailing content");
}

inline std::vector<std::string> parse_table_path(Cursor& c, bool& is_array_of_tables) {
  c.take();  // '['
  is_array_of_tables = !c.eof() && c.peek() == '[';
  if (is_array_of_tables) c.take();
  std::vector<std::string> path;
  while (true) {
    path.push_back(parse_key(c));
    c.skip_ws_inline();
    if (!c.eof() && c.peek() == '.') {
      c.take();
      continue;
    }
    break;
  }
  if (c.eof() || c.take() != ']') c.fail("expected ']' after table name");
  if (is_array_of_tables && (c.eof() || c.take() != ']'))
    c.fail("expected ']]' after array-of-tables name");
  return path;
}

}  // namespace detail

inline Table parse(const std::string& text) {
  detail::Cursor c{text};
  Table root;
  Table* current = &root;

  while (true) {
    c.skip_ws_and_comments();
    if (c.eof()) break;

    if (c.peek() == '[') {
      bool aot = false;
      const auto path = detail::parse_table_path(c, aot);
      detail::expect_line_end(c);

      Table* t = &root;
      for (std::size_t i = 0; i < path.size(); ++i) {
        const bool last = i + 1 == path.size();
        Value* v = t->find(path[i]);
        if (last && aot) {
          if (!v) {
            v = &t->insert(path[i]);
            v->storage = Array{};
          }
          if (!v->is_array()) c.fail("'" + path[i] + "' is not an array of tables");
          auto& arr = std::get<Array>(v->storage);
          arr.emplace_back(Value::Storage{Table{}});
          t = &arr.back().table();
        } else {
          if (!v) {
            v = &t->insert(path[i]);
            v->storage = Table{};
          }
          if (v->is_array()) {
            auto& arr = std::get<Array>(v->storage);
            if (arr.empty() || !arr.back().is_table())
              c.fail("'" + path[i] + "' is not a table");
            t = &arr.back().table();
          } else if (v->is_table()) {
            t = &v->table();
          } else {
            c.fail("'" + path[i] + "' is not a table");
          }
        }
      }
      current = t;
      continue;
    }

    const std::string key = detail::parse_key(c);
    c.skip_ws_inline();
    if (c.eof() || c.take() != '=') c.fail("expected '=' after key '" + key + "'");
    Value v = detail::parse_value(c);
    detail::expect_line_end(c);
    if (current->contains(key)) c.fail("duplicate key '" + key + "'");
    current->insert(key) = std::move(v);
  }
  return root;
}

}  // namespace recomb::toml
