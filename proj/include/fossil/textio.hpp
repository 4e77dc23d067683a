#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fossil/common.hpp"

namespace fossil {

// Shortest round-trip decimal form, locale independent. All numeric output
// (CSV cells, JSON via the serializer's own shortest form) goes through
// deterministic formatting so reruns are byte-identical.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_index(std::size_t v) { return std::to_string(v); }

// Strict full-token parses; trailing garbage is an error.
inline double parse_double(std::string_view tok, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw IoError(where + ": malformed number '" + std::string(tok) + "'");
  return v;
}

inline long long parse_int(std::string_view tok, const std::string& where) {
  long long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw IoError(where + ": malformed integer '" + std::string(tok) + "'");
  return v;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on " + path.string());
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(),
            static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failure on " + path.string());
}

// Unquoted CSV: fields may not contain commas or newlines. Sample ids are
// validated on write; everything else we emit is numeric.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

// Splits into lines, tolerating a trailing newline and CRLF endings.
inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    std::string line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = pos + 1;
  }
  return lines;
}

inline void require_plain_id(const std::string& id, const std::string& where) {
  if (id.empty()) throw ValidationError(where + ": empty sample_id");
  for (char c : id) {
    if (c == ',' || c == '\n' || c == '\r')
      throw ValidationError(where + ": sample_id '" + id +
                            "' contains a separator character");
  }
}

inline std::string join(const std::vector<std::string>& parts,
                        const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace fossil
