#pragma once

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nlsbif/error.hpp"

namespace nlsbif {

/// Flat "key = value" text with [section] headers. '#' and ';' start
/// comments. Every lookup is recorded, so `reject_unused` can flag typos.
class ConfigFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static ConfigFile parse(std::istream& in, const std::string& origin = "<config>") {
    ConfigFile cf;
    cf.origin_ = origin;
    std::string raw, section;
    int lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      std::string line = strip(raw.substr(0, raw.find_first_of("#;")));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') cf.fail(lineno, "unterminated section header");
        section = strip(line.substr(1, line.size() - 2));
        if (section.empty()) cf.fail(lineno, "empty section name");
        if (cf.sections_.count(section)) cf.fail(lineno, "duplicate section [" + section + "]");
        cf.sections_[section] = lineno;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) cf.fail(lineno, "expected 'key = value'");
      if (section.empty()) cf.fail(lineno, "key outside any section");
      const std::string key = strip(line.substr(0, eq));
      const std::string val = strip(line.substr(eq + 1));
      if (key.empty()) cf.fail(lineno, "empty key");
      if (val.empty()) cf.fail(lineno, "key '" + key + "' has no value");
      const std::string full = section + "." + key;
      if (cf.entries_.count(full)) cf.fail(lineno, "duplicate key '" + full + "'");
      cf.entries_[full] = {val, lineno};
    }
    return cf;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ConfigError, "cannot open config file " + path);
    return parse(in, path);
  }

  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
  const std::string& origin() const noexcept { return origin_; }

  std::optional<std::string> get_string(const std::string& key) const {
    used_.insert(key);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.value;
  }

  std::optional<double> get_double(const std::string& key) const {
    auto s = get_string(key);
    if (!s) return std::nullopt;
    return to_double(key, *s);
  }

  std::optional<int> get_int(const std::string& key) const {
    auto d = get_double(key);
    if (!d) return std::nullopt;
    if (*d != std::floor(*d) || std::abs(*d) > 1e9) fail_key(key, "expected an integer");
    return static_cast<int>(*d);
  }

  std::optional<bool> get_bool(const std::string& key) const {
    auto s = get_string(key);
    if (!s) return std::nullopt;
    if (*s == "true" || *s == "yes" || *s == "1") return true;
    if (*s == "false" || *s == "no" || *s == "0") return false;
    fail_key(key, "expected true or false, got '" + *s + "'");
    return false;
  }

  /// Comma-separated list.
  std::optional<std::vector<std::string>> get_list(const std::string& key) const {
    auto s = get_string(key);
    if (!s) return std::nullopt;
    std::vector<std::string> out;
    std::stringstream ss(*s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = strip(item);
      if (item.empty()) fail_key(key, "empty list item");
      out.push_back(item);
    }
    return out;
  }

  std::optional<std::vector<double>> get_double_list(const std::string& key) const {
    auto l = get_list(key);
    if (!l) return std::nullopt;
    std::vector<double> out;
    for (const auto& s : *l) out.push_back(to_double(key, s));
    return out;
  }

  /// Sections outside `allowed`, and keys never looked up, are errors.
  void reject_unused(const std::set<std::string>& allowed_sections) const {
    for (const auto& [name, line] : sections_)
      if (!allowed_sections.count(name)) fail(line, "section [" + name + "] is not used by this scenario");
    for (const auto& [key, e] : entries_)
      if (!used_.count(key)) fail(e.line, "unknown key '" + key + "'");
  }

  [[noreturn]] void fail_key(const std::string& key, const std::string& msg) const {
    auto it = entries_.find(key);
    fail(it == entries_.end() ? 0 : it->second.line, "'" + key + "': " + msg);
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    std::string where = origin_;
    if (line > 0) where += ":" + std::to_string(line);
    throw Error(Errc::ConfigError, where + ": " + msg);
  }

 private:
  static std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  double to_double(const std::string& key, const std::string& s) const {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
      fail_key(key, "expected a finite number, got '" + s + "'");
    return v;
  }

  std::string origin_;
  std::map<std::string, int> sections_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

}  // namespace nlsbif
