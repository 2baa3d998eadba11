#pragma once

// Reader for the experiment configuration files: a TOML subset with [tables],
// `key = value` lines, `#` comments, double-quoted strings, numbers, booleans
// and (possibly multi-line) arrays of those.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace einode {

struct ConfigValue {
  enum class Type { boolean, number, string, array };

  Type type = Type::number;
  bool boolean = false;
  double number = 0.0;
  std::string text;
  std::vector<ConfigValue> items;
  std::size_t line = 0;

  const char* type_name() const noexcept;
};

class ConfigDocument {
 public:
  /// Throws ConfigError with "source:line: message" on malformed input.
  static ConfigDocument parse(std::string_view text, const std::string& source = "<config>");
  static ConfigDocument load(const std::string& path);

  const std::string& source() const noexcept { return source_; }
  bool has_table(const std::string& table) const;
  /// nullptr when absent; "" names the top-level table. Marks the key as used.
  const ConfigValue* find(const std::string& table, const std::string& key) const;

  double number(const std::string& table, const std::string& key, double fallback) const;
  std::uint64_t integer(const std::string& table, const std::string& key,
                        std::uint64_t fallback) const;
  bool boolean(const std::string& table, const std::string& key, bool fallback) const;
  std::string string(const std::string& table, const std::string& key,
                     const std::string& fallback) const;
  std::vector<double> numbers(const std::string& table, const std::string& key,
                              const std::vector<double>& fallback) const;
  std::vector<std::string> strings(const std::string& table, const std::string& key,
                                   const std::vector<std::string>& fallback) const;

  /// Keys in `table` that were never looked up.
  std::vector<std::string> unused_keys(const std::string& table) const;
  /// Throws ConfigError naming the first key nobody looked up (catches typos).
  void reject_unused() const;

  [[noreturn]] void fail(const ConfigValue& at, const std::string& message) const;

 private:
  struct Entry {
    ConfigValue value;
    mutable bool used = false;
  };
  std::string source_;
  std::map<std::string, std::map<std::string, Entry>> tables_;
  std::vector<std::string> table_order_;
};

}  // namespace einode
