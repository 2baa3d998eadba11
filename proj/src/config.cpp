#include "einode/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "einode/errors.hpp"

namespace einode {
namespace {

class Parser {
 public:
  Parser(std::string_view text, const std::string& source) : text_(text), source_(source) {}

  [[noreturn]] void fail(const std::string& message) const {
    throw ConfigError(source_ + ":" + std::to_string(line_) + ": " + message);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  std::size_t line() const { return line_; }

  void advance() {
    if (peek() == '\n') ++line_;
    ++pos_;
  }

  // Spaces and tabs only.
  void skip_blank() {
    while (peek() == ' ' || peek() == '\t' || peek() == '\r') advance();
  }

  void skip_comment() {
    if (peek() == '#')
      while (!at_end() && peek() != '\n') advance();
  }

  // Whitespace, newlines and comments (inside arrays).
  void skip_space() {
    for (;;) {
      skip_blank();
      skip_comment();
      if (peek() != '\n') return;
      advance();
    }
  }

  void expect_line_end() {
    skip_blank();
    skip_comment();
    if (!at_end() && peek() != '\n') fail(std::string("unexpected '") + peek() + "'");
  }

  std::string bare_key() {
    std::string key;
    while (!at_end()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
        key += c;
        advance();
      } else {
        break;
      }
    }
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::string quoted() {
    advance();  // opening quote
    std::string out;
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = peek();
      advance();
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      const char e = peek();
      advance();
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("unknown escape '\\") + e + "'");
      }
    }
  }

  [[noreturn]] void unterminated_array(const ConfigValue& v) {
    line_ = v.line;
    fail("unterminated array");
  }

  ConfigValue value() {
    ConfigValue v;
    v.line = line_;
    const char c = peek();
    if (c == '"') {
      v.type = ConfigValue::Type::string;
      v.text = quoted();
      return v;
    }
    if (c == '[') {
      v.type = ConfigValue::Type::array;
      advance();
      for (;;) {
        skip_space();
        if (at_end()) unterminated_array(v);
        if (peek() == ']') {
          advance();
          return v;
        }
        v.items.push_back(value());
        skip_space();
        if (at_end()) unterminated_array(v);
        if (peek() == ',') {
          advance();
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
    }
    std::string token;
    while (!at_end()) {
      const char t = peek();
      if (std::isalnum(static_cast<unsigned char>(t)) || t == '.' || t == '+' || t == '-' || t == '_') {
        token += t;
        advance();
      } else {
        break;
      }
    }
    if (token.empty()) fail("expected a value");
    if (token == "true" || token == "false") {
      v.type = ConfigValue::Type::boolean;
      v.boolean = token == "true";
      return v;
    }
    std::string digits;
    for (char t : token)
      if (t != '_') digits += t;
    if (digits == "inf" || digits == "+inf") {
      v.number = INFINITY;
      return v;
    }
    if (digits == "-inf") {
      v.number = -INFINITY;
      return v;
    }
    const char* first = digits.data();
    if (*first == '+') ++first;
    const char* last = digits.data() + digits.size();
    const auto [ptr, ec] = std::from_chars(first, last, v.number);
    if (ec != std::errc() || ptr != last) fail("malformed value '" + token + "'");
    return v;
  }

 private:
  std::string_view text_;
  const std::string& source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace

const char* ConfigValue::type_name() const noexcept {
  switch (type) {
    case Type::boolean: return "boolean";
    case Type::number: return "number";
    case Type::string: return "string";
    case Type::array: return "array";
  }
  return "?";
}

ConfigDocument ConfigDocument::parse(std::string_view text, const std::string& source) {
  ConfigDocument doc;
  doc.source_ = source;
  doc.tables_[""];
  doc.table_order_.push_back("");
  Parser p(text, doc.source_);
  std::string table;
  while (!p.at_end()) {
    p.skip_blank();
    p.skip_comment();
    if (p.peek() == '\n') {
      p.advance();
      continue;
    }
    if (p.at_end()) break;
    if (p.peek() == '[') {
      p.advance();
      p.skip_blank();
      table = p.bare_key();
      p.skip_blank();
      if (p.peek() != ']') p.fail("expected ']' after table name");
      p.advance();
      if (doc.tables_.count(table) && table != "") p.fail("table [" + table + "] defined twice");
      doc.tables_[table];
      doc.table_order_.push_back(table);
      p.expect_line_end();
      continue;
    }
    const std::size_t line = p.line();
    const std::string key = p.peek() == '"' ? p.quoted() : p.bare_key();
    p.skip_blank();
    if (p.peek() != '=') p.fail("expected '=' after key '" + key + "'");
    p.advance();
    p.skip_blank();
    ConfigValue v = p.value();
    v.line = line;
    auto& entries = doc.tables_[table];
    if (entries.count(key)) p.fail("key '" + key + "' defined twice");
    entries[key].value = std::move(v);
    p.expect_line_end();
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

bool ConfigDocument::has_table(const std::string& table) const { return tables_.count(table) != 0; }

const ConfigValue* ConfigDocument::find(const std::string& table, const std::string& key) const {
  const auto t = tables_.find(table);
  if (t == tables_.end()) return nullptr;
  const auto e = t->second.find(key);
  if (e == t->second.end()) return nullptr;
  e->second.used = true;
  return &e->second.value;
}

void ConfigDocument::fail(const ConfigValue& at, const std::string& message) const {
  throw ConfigError(source_ + ":" + std::to_string(at.line) + ": " + message);
}

namespace {

std::string qualified(const std::string& table, const std::string& key) {
  return table.empty() ? key : table + "." + key;
}

}  // namespace

double ConfigDocument::number(const std::string& table, const std::string& key,
                              double fallback) const {
  const ConfigValue* v = find(table, key);
  if (!v) return fallback;
  if (v->type != ConfigValue::Type::number)
    fail(*v, "'" + qualified(table, key) + "' must be a number, got " + v->type_name());
  return v->number;
}

std::uint64_t ConfigDocument::integer(const std::string& table, const std::string& key,
                                      std::uint64_t fallback) const {
  const ConfigValue* v = find(table, key);
  if (!v) return fallback;
  if (v->type != ConfigValue::Type::number || v->number < 0.0 || v->number != std::floor(v->number) ||
      v->number > 9.0e15)
    fail(*v, "'" + qualified(table, key) + "' must be a non-negative integer");
  return static_cast<std::uint64_t>(v->number);
}

bool ConfigDocument::boolean(const std::string& table, const std::string& key,
                             bool fallback) const {
  const ConfigValue* v = find(table, key);
  if (!v) return fallback;
  if (v->type != ConfigValue::Type::boolean)
    fail(*v, "'" + qualified(table, key) + "' must be true or false");
  return v->boolean;
}

std::string ConfigDocument::string(const std::string& table, const std::string& key,
                                   const std::string& fallback) const {
  const ConfigValue* v = find(table, key);
  if (!v) return fallback;
  if (v->type != ConfigValue::Type::string)
    fail(*v, "'" + qualified(table, key) + "' must be a string, got " + v->type_name());
  return v->text;
}

std::vector<double> ConfigDocument::numbers(const std::string& table, const std::string& key,
                                            const std::vector<double>& fallback) const {
  const ConfigValue* v = find(table, key);
  if (!v) return fallback;
  if (v->type != ConfigValue::Type::array)
    fail(*v, "'" + qualified(table, key) + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& item : v->items) {
    if (item.type != ConfigValue::Type::number)
      fail(*v, "'" + qualified(table, key) + "' must be an array of numbers");
    out.push_back(item.number);
  }
  return out;
}

std::vector<std::string> ConfigDocument::strings(const std::string& table, const std::string& key,
                                                 const std::vector<std::string>& fallback) const {
  const ConfigValue* v = find(table, key);
  if (!v) return fallback;
  if (v->type != ConfigValue::Type::array)
    fail(*v, "'" + qualified(table, key) + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& item : v->items) {
    if (item.type != ConfigValue::Type::string)
      fail(*v, "'" + qualified(table, key) + "' must be an array of strings");
    out.push_back(item.text);
  }
  return out;
}

std::vector<std::string> ConfigDocument::unused_keys(const std::string& table) const {
  std::vector<std::string> out;
  const auto t = tables_.find(table);
  if (t == tables_.end()) return out;
  for (const auto& [key, entry] : t->second)
    if (!entry.used) out.push_back(key);
  return out;
}

void ConfigDocument::reject_unused() const {
  for (const auto& table : table_order_)
    for (const auto& [key, entry] : tables_.at(table))
      if (!entry.used) fail(entry.value, "unknown key '" + qualified(table, key) + "'");
}

}  // namespace einode
