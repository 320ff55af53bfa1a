#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ulrisk/error.hpp"

namespace ulrisk::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
  std::vector<std::string> comments;      // '#' lines, without the marker
};

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline Table parse(std::istream& in, const std::string& source) {
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) continue;
    if (line.front() == '#') {
      table.comments.push_back(line.substr(1));
      continue;
    }
    if (!have_header) {
      table.header = split_line(line);
      have_header = true;
      continue;
    }
    auto fields = split_line(line);
    if (fields.size() != table.header.size()) {
      fail(ErrorKind::BadValue, source + ":" + std::to_string(line_no) + ": expected " +
                                    std::to_string(table.header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) fail(ErrorKind::EmptyFile, source + ": no header row");
  return table;
}

inline Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoFailure, "cannot open " + path.string());
  return parse(in, path.string());
}

inline std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += quote(fields[i]);
  }
  return out;
}

/// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) fail(ErrorKind::InvariantViolation, "cannot format double");
  return std::string(buf, ptr);
}

inline bool try_parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline double parse_finite(std::string_view s, const std::string& context) {
  double v = 0.0;
  if (!try_parse_double(s, v) || !std::isfinite(v)) {
    fail(ErrorKind::BadValue, context + ": non-finite or unparsable value '" + std::string(s) + "'");
  }
  return v;
}

inline long long parse_int(std::string_view s, const std::string& context) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorKind::BadValue, context + ": unparsable integer '" + std::string(s) + "'");
  }
  return v;
}

inline void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoFailure, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) fail(ErrorKind::IoFailure, "write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ulrisk::csv
