#pragma once

#include <map>
#include <string>

#include "ssdef/common.hpp"

namespace ssdef {

// Minimal INI-style config: [section] headers, key = value lines, '#' or ';'
// comments. Unknown sections/keys are preserved (callers validate).
class IniFile {
 public:
  static IniFile parse_file(const std::string& path);
  static IniFile parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& sec, const std::string& key) const;
  std::string get_str(const std::string& sec, const std::string& key,
                      const std::string& fallback) const;
  std::string require_str(const std::string& sec, const std::string& key) const;

  // numbers accept plain literals and fractions like "8/255"
  double get_num(const std::string& sec, const std::string& key, double fallback) const;
  long get_int(const std::string& sec, const std::string& key, long fallback) const;
  bool get_bool(const std::string& sec, const std::string& key, bool fallback) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }
  std::string origin() const { return origin_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string origin_;
};

// "0.03", "8/255" -> double; ConfigError with context on failure.
double parse_number(const std::string& text, const std::string& context);
bool parse_bool(const std::string& text, const std::string& context);

}  // namespace ssdef
