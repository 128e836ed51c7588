// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <recomb/core.hpp>

#include <bit>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace recomb::io {

static_assert(std::endian::native == std::endian::little,
              "binary readers/writers assume a little-endian host");

enum class CloudFileFormat { PLY_ASCII, PLY_BINARY_LE, PCD_ASCII, PCD_BINARY, XYZ_CSV };

inline std::string format_name(CloudFileFormat f) {
  switch (f) {
    case CloudFileFormat::PLY_ASCII: return "ply_ascii";
    case CloudFileFormat::PLY_BINARY_LE: return "ply_binary_le";
    case CloudFileFormat::PCD_ASCII: return "pcd_ascii";
    case CloudFileFormat::PCD_BINARY: return "pcd_binary";
    case CloudFileFormat::XYZ_CSV: return "xyz_csv";
  }
  return "unknown";
}

/// File-system level failure (missing file, unwritable path).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed content. The message always carries the byte offset.
class ParseError : public Error {
 public:
  ParseError(std::size_t byte, const std::string& what)
      : Error("parse error at byte " + std::to_string(byte) + ": " + what),
        byte_offset(byte) {}
  std::size_t byte_offset;
};

/// Sidecar/metadata schema problems.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Counters a loader fills in while reading; callers may pass null.
struct ReadStats {
  std::size_t dropped_nonfinite = 0;   // points with NaN/Inf positions
  std::size_t dropped_degenerate = 0;  // triangles repeating a vertex
};

namespace detail {

/// Whole file in memory with a cursor, so every error can name its byte
/// offset. Input files in this domain are comfortably RAM-sized.
class FileBuffer {
 public:
  static FileBuffer from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    FileBuffer b;
    b.data_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure: " + path.string());
    return b;
  }

  static FileBuffer from_string(std::string s) {
    FileBuffer b;
    b.data_ = std::move(s);
    return b;
  }

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return data_.size(); }
  bool eof() const { return pos_ >= data_.size(); }
  const char* ptr() const { return data_.data() + pos_; }
  std::string_view all() const { return data_; }

  /// Next line without its terminator; handles \n and \r\n. Throws at EOF.
  std::string_view line() {
    if (eof()) throw ParseError(pos_, "unexpected end of file");
    const std::size_t start = pos_;
    std::size_t end = data_.find('\n', start);
    if (end == std::string::npos) {
      pos_ = data_.size();
      end = data_.size();
    } else {
      pos_ = end + 1;
    }
    std::string_view v(data_.data() + start, end - start);
    if (!v.empty() && v.back() == '\r') v.remove_suffix(1);
    return v;
  }

  /// Raw bytes; throws on truncation.
  void read_raw(void* dst, std::size_t n) {
    if (pos_ + n > data_.size())
      throw ParseError(data_.size(), "unexpected end of file (need " +
                                         std::to_string(pos_ + n - data_.size()) +
                                         " more bytes)");
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

  void skip(std::size_t n) {
    if (pos_ + n > data_.size())
      throw ParseError(data_.size(), "unexpected end of file");
    pos_ += n;
  }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::vector<std::string_view> split_char(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = s.find(sep, start);
    if (end == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view tok, std::size_t byte_for_error) {
  char buf[64];
  if (tok.empty() || tok.size() >= sizeof(buf))
    throw ParseError(byte_for_error, "expected a number, got '" + std::string(tok) + "'");
  std::memcpy(buf, tok.data(), tok.size());
  buf[tok.size()] = '\0';
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(buf, &end);
  if (end != buf + tok.size())
    throw ParseError(byte_for_error, "expected a number, got '" + std::string(tok) + "'");
  return v;
}

inline long long parse_int(std::string_view tok, std::size_t byte_for_error) {
  char buf[32];
  if (tok.empty() || tok.size() >= sizeof(buf))
    throw ParseError(byte_for_error, "expected an integer, got '" + std::string(tok) + "'");
  std::memcpy(buf, tok.data(), tok.size());
  buf[tok.size()] = '\0';
  char* end = nullptr;
  const long long v = std::strtoll(buf, &end, 10);
  if (end != buf + tok.size())
    throw ParseError(byte_for_error, "expected an integer, got '" + std::string(tok) + "'");
  return v;
}

/// Shortest-exact formatting for doubles: %.17g round-trips every value.
inline void append_g17(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

inline void append_int(std::string& out, long long v) {
  char buf[24];
  const int n = std::snprintf(buf, sizeof(buf), "%lld", v);
  out.append(buf, static_cast<std::size_t>(n));
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failure: " + path.string());
}

}  // namespace detail
}  // namespace recomb::io
