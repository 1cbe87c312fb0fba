// Flat key = value configuration files: diffable, append-safe, and
// language-neutral. '#' starts a comment; later assignments win.

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vpmix/errors.hpp"

namespace vpmix {

class Config {
 public:
  Config() = default;

  static Config fromText(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw DomainError("config: line " + std::to_string(line_no) + " has no '=': " + trimmed);
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) {
        throw DomainError("config: empty key on line " + std::to_string(line_no));
      }
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static Config fromFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return fromText(buffer.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string getString(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string requireString(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw DomainError("config: missing required key '" + key + "'");
    return it->second;
  }

  double getDouble(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parseDouble(key, it->second);
  }

  std::int64_t getInt(const std::string& key, std::int64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t used = 0;
      const std::int64_t v = std::stoll(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw DomainError("config: key '" + key + "' is not an integer: " + it->second);
    }
  }

  std::uint64_t getUint(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t used = 0;
      const std::uint64_t v = std::stoull(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw DomainError("config: key '" + key + "' is not an unsigned integer: " + it->second);
    }
  }

  bool getBool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw DomainError("config: key '" + key + "' is not a boolean: " + it->second);
  }

  /// Whitespace- or comma-separated list of doubles.
  std::vector<double> getDoubleList(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return {};
    std::string normalized = it->second;
    for (char& c : normalized) {
      if (c == ',') c = ' ';
    }
    std::istringstream in(normalized);
    std::vector<double> out;
    std::string token;
    while (in >> token) out.push_back(parseDouble(key, token));
    return out;
  }

  std::vector<std::string> getStringList(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return {};
    std::string normalized = it->second;
    for (char& c : normalized) {
      if (c == ',') c = ' ';
    }
    std::istringstream in(normalized);
    std::vector<std::string> out;
    std::string token;
    while (in >> token) out.push_back(token);
    return out;
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  const std::map<std::string, std::string>& values() const { return values_; }

  /// FNV-1a over the canonical sorted "key=value\n" rendering; identifies the
  /// effective configuration in manifests.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    const auto feed = [&h](const std::string& s) {
      for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
      }
    };
    for (const auto& [key, value] : values_) {
      feed(key);
      feed("=");
      feed(value);
      feed("\n");
    }
    return h;
  }

 private:
  static std::string trim(const std::string& s) {
    const std::size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const std::size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  static double parseDouble(const std::string& key, const std::string& value) {
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw DomainError("config: key '" + key + "' is not a number: " + value);
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace vpmix
