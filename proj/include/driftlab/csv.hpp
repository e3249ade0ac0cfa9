#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "driftlab/errors.hpp"

namespace driftlab {

// Minimal RFC-4180 CSV layer. Fields containing commas, quotes or
// newlines are quoted on write and unquoted on read; everything the
// toolkit emits round-trips byte-exactly because floating point values
// are written with shortest round-trip formatting (std::to_chars).

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_int(std::int64_t v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view field) {
  double out = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), out);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw_data("expected a number, got \"" + std::string(field) + "\"");
  }
  return out;
}

inline std::int64_t parse_int(std::string_view field) {
  std::int64_t out = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), out);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw_data("expected an integer, got \"" + std::string(field) + "\"");
  }
  return out;
}

inline double parse_double_field(std::string_view field, const std::string& path,
                                 std::size_t line, std::size_t column) {
  double out = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), out);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw_data(path + ":" + std::to_string(line) + ":" + std::to_string(column) +
               ": expected a number, got \"" + std::string(field) + "\"");
  }
  return out;
}

inline std::int64_t parse_int_field(std::string_view field, const std::string& path,
                                    std::size_t line, std::size_t column) {
  std::int64_t out = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), out);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw_data(path + ":" + std::to_string(line) + ":" + std::to_string(column) +
               ": expected an integer, got \"" + std::string(field) + "\"");
  }
  return out;
}

namespace detail {

// Splits one physical CSV record (quotes already balanced) into fields.
inline void split_record(const std::string& record, const std::string& path,
                         std::size_t line, std::vector<std::string>& out) {
  out.clear();
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < record.size(); ++i) {
    char c = record[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < record.size() && record[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      if (!field.empty()) {
        throw_data(path + ":" + std::to_string(line) +
                   ": quote inside unquoted field");
      }
      in_quotes = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) {
    throw_data(path + ":" + std::to_string(line) + ": unterminated quoted field");
  }
  out.push_back(std::move(field));
}

}  // namespace detail

// Streams rows to `row_fn(line_number, fields)`. The header row is
// validated against `expected_header` (exact order). Row width errors
// name the file and line.
inline void read_csv(const std::string& path,
                     const std::vector<std::string>& expected_header,
                     const std::function<void(std::size_t, const std::vector<std::string>&)>& row_fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open " + path);
  std::string record;
  std::vector<std::string> fields;
  std::size_t line = 0;
  bool saw_header = false;
  std::string raw;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    // Re-join physical lines while inside a quoted field.
    record = raw;
    while (std::count(record.begin(), record.end(), '"') % 2 != 0) {
      std::string cont;
      if (!std::getline(in, cont)) {
        throw_data(path + ":" + std::to_string(line) + ": unterminated quoted field");
      }
      ++line;
      if (!cont.empty() && cont.back() == '\r') cont.pop_back();
      record += "\n" + cont;
    }
    detail::split_record(record, path, line, fields);
    if (!saw_header) {
      if (fields != expected_header) {
        std::string want;
        for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
        std::string got;
        for (const auto& h : fields) got += (got.empty() ? "" : ",") + h;
        throw_data(path + ":1: expected header \"" + want + "\", got \"" + got + "\"");
      }
      saw_header = true;
      continue;
    }
    if (fields.size() != expected_header.size()) {
      throw_data(path + ":" + std::to_string(line) + ": expected " +
                 std::to_string(expected_header.size()) + " fields, got " +
                 std::to_string(fields.size()));
    }
    row_fn(line, fields);
  }
  if (!saw_header) throw_data(path + ": empty file, expected a header row");
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw_io("cannot write " + path);
  }

  void write_row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      write_field(fields[i]);
    }
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw_io("failed writing " + path_);
  }

 private:
  void write_field(const std::string& f) {
    if (f.find_first_of(",\"\n") == std::string::npos) {
      out_ << f;
      return;
    }
    out_ << '"';
    for (char c : f) {
      if (c == '"') out_ << "\"\"";
      else out_ << c;
    }
    out_ << '"';
  }

  std::string path_;
  std::ofstream out_;
};

}  // namespace driftlab
