#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gsmsim {

/// Shortest decimal form that round-trips the double exactly.
std::string fmt_double(double value);

/// strtod with full-string validation; throws ConfigError with context.
double parse_double(const std::string& text, const std::string& context);

std::int64_t parse_int(const std::string& text, const std::string& context);
std::uint64_t parse_uint(const std::string& text, const std::string& context);

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

std::string join_doubles(const std::vector<double>& values, char sep);
std::vector<double> parse_double_list(const std::string& text, const std::string& context);

/// FNV-1a 64-bit over a byte string.
std::uint64_t fnv1a64(const std::string& text);

}  // namespace gsmsim
