#include "ssdef/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace ssdef {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_string(ss.str(), path);
}

IniFile IniFile::parse_string(const std::string& text, const std::string& origin) {
  IniFile ini;
  ini.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      ini.sections_[section];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    ini.sections_[section][key] = trim(line.substr(eq + 1));
  }
  return ini;
}

bool IniFile::has(const std::string& sec, const std::string& key) const {
  auto s = sections_.find(sec);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string IniFile::get_str(const std::string& sec, const std::string& key,
                             const std::string& fallback) const {
  auto s = sections_.find(sec);
  if (s == sections_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

std::string IniFile::require_str(const std::string& sec, const std::string& key) const {
  if (!has(sec, key))
    throw ConfigError(origin_ + ": missing required field " + sec + "." + key);
  return get_str(sec, key, "");
}

double IniFile::get_num(const std::string& sec, const std::string& key,
                        double fallback) const {
  if (!has(sec, key)) return fallback;
  return parse_number(get_str(sec, key, ""), sec + "." + key);
}

long IniFile::get_int(const std::string& sec, const std::string& key, long fallback) const {
  const double v = get_num(sec, key, double(fallback));
  const long i = static_cast<long>(v);
  if (double(i) != v)
    throw ConfigError("config: field " + sec + "." + key + " must be an integer");
  return i;
}

bool IniFile::get_bool(const std::string& sec, const std::string& key, bool fallback) const {
  if (!has(sec, key)) return fallback;
  return parse_bool(get_str(sec, key, ""), sec + "." + key);
}

double parse_number(const std::string& text, const std::string& context) {
  const auto slash = text.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing junk");
      return v;
    }
    const std::string num = text.substr(0, slash), den = text.substr(slash + 1);
    const double a = std::stod(num, &used);
    if (used != num.size()) throw std::invalid_argument("trailing junk");
    const double b = std::stod(den, &used);
    if (used != den.size()) throw std::invalid_argument("trailing junk");
    if (b == 0.0) throw std::invalid_argument("division by zero");
    return a / b;
  } catch (const std::exception&) {
    throw ConfigError("config: field " + context + " is not a number: '" + text + "'");
  }
}

bool parse_bool(const std::string& text, const std::string& context) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("config: field " + context + " is not a boolean: '" + text + "'");
}

}  // namespace ssdef
