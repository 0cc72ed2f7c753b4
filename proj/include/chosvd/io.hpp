#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "chosvd/errors.hpp"
#include "chosvd/tensor.hpp"

namespace chosvd {

// Shortest round-trip decimal rendering.  All persisted numbers go through
// this so outputs are byte-identical across runs and platforms.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const std::to_chars_result res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Fixed two-decimal rendering for human-facing metric tables.
inline std::string format_metric(double v) {
  const double r = std::round(v * 100.0) / 100.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", r);
  return std::string(buf);
}

inline double parse_double(std::string_view text, const std::string& where) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const std::from_chars_result res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw DataError("cannot parse number '" + std::string(text) + "' in " +
                    where);
  return v;
}

inline long long parse_int(std::string_view text, const std::string& where) {
  long long v = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const std::from_chars_result res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw DataError("cannot parse integer '" + std::string(text) + "' in " +
                    where);
  return v;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.emplace_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << content;
  if (!out) throw DataError("write failed: " + path.string());
}

// Channel series table: one header row of channel names, then one row per
// minute.  Empty cells mark missing samples and read back as NaN.
struct SeriesTable {
  std::vector<std::string> channels;
  // column-major: values[c][t]
  std::vector<std::vector<double>> values;
  std::size_t length = 0;
};

inline SeriesTable read_series_csv(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::size_t first = 0;
  while (first < lines.size() &&
         (trim(lines[first]).empty() || trim(lines[first])[0] == '#'))
    ++first;  // audit comments precede the header
  if (first >= lines.size())
    throw DataError("empty series file: " + path.string());
  SeriesTable table;
  for (std::string& name : split(lines[first], ','))
    table.channels.push_back(trim(name));
  if (table.channels.empty())
    throw DataError("series file has no channels: " + path.string());
  table.values.assign(table.channels.size(), {});
  for (std::size_t r = first + 1; r < lines.size(); ++r) {
    if (trim(lines[r]).empty() || trim(lines[r])[0] == '#') continue;
    const std::vector<std::string> cells = split(lines[r], ',');
    if (cells.size() != table.channels.size())
      throw DataError("row " + std::to_string(r + 1) + " of " +
                      path.string() + " has " + std::to_string(cells.size()) +
                      " cells, expected " +
                      std::to_string(table.channels.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = trim(cells[c]);
      table.values[c].push_back(
          cell.empty() ? std::numeric_limits<double>::quiet_NaN()
                       : parse_double(cell, path.string()));
    }
    ++table.length;
  }
  if (table.length == 0)
    throw DataError("series file has no samples: " + path.string());
  return table;
}

inline void write_series_csv(const std::filesystem::path& path,
                             const SeriesTable& table,
                             const std::vector<std::string>& comments = {}) {
  std::ostringstream out;
  for (const std::string& comment : comments) out << "# " << comment << '\n';
  for (std::size_t c = 0; c < table.channels.size(); ++c) {
    if (c) out << ',';
    out << table.channels[c];
  }
  out << '\n';
  for (std::size_t t = 0; t < table.length; ++t) {
    for (std::size_t c = 0; c < table.channels.size(); ++c) {
      if (c) out << ',';
      const double v = table.values[c][t];
      if (std::isfinite(v)) out << format_double(v);
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace chosvd
