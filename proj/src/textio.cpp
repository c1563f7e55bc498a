#include "gsmsim/textio.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "gsmsim/errors.hpp"

namespace gsmsim {

std::string fmt_double(double value) {
  // %.17g always round-trips; try shorter forms first for readability
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) return buf;
  }
  return buf;
}

double parse_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError(context + ": empty number");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw ConfigError(context + ": invalid number '" + t + "'");
  return v;
}

std::int64_t parse_int(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError(context + ": empty integer");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw ConfigError(context + ": invalid integer '" + t + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  if (t.empty() || t[0] == '-') throw ConfigError(context + ": invalid unsigned '" + t + "'");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw ConfigError(context + ": invalid unsigned '" + t + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

std::string join_doubles(const std::vector<double>& values, char sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(sep);
    out += fmt_double(values[i]);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& context) {
  std::vector<double> out;
  for (const auto& piece : split(text, ',')) {
    const std::string t = trim(piece);
    if (t.empty()) continue;
    out.push_back(parse_double(t, context));
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace gsmsim
