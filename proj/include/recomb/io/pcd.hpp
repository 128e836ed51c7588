// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// PCD v0.7 reader/writer (ascii and binary). Arbitrary extra scalar fields
// are preserved as attributes; a packed `rgb` field is decoded into three
// r/g/b attributes. binary_compressed is rejected by name.

#pragma once

#include <recomb/io/common.hpp>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace recomb::io::pcd {

namespace detail {

using io::detail::FileBuffer;

struct Field {
  std::string name;
  char type = 'F';  // F, I, U
  std::size_t size = 4;
};

struct Header {
  std::vector<Field> fields;
  std::size_t points = 0;
  bool binary = false;
};

inline Header parse_header(FileBuffer& buf) {
  Header h;
  std::vector<std::string> field_names;
  std::vector<std::size_t> sizes;
  std::vector<char> types;
  bool have_points = false, have_width = false;
  std::size_t width = 0, height = 1;

  while (true) {
    const std::size_t line_start = buf.pos();
    const auto raw = buf.line();
    const auto line = io::detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto toks = io::detail::split_ws(line);
    const auto& kw = toks[0];
    if (kw == "VERSION") {
      continue;
    } else if (kw == "FIELDS" || kw == "COLUMNS") {
      for (std::size_t i = 1; i < toks.size(); ++i) field_names.emplace_back(toks[i]);
    } else if (kw == "SIZE") {
      for (std::size_t i = 1; i < toks.size(); ++i)
        sizes.push_back(static_cast<std::size_t>(io::detail::parse_int(toks[i], line_start)));
    } else if (kw == "TYPE") {
      for (std::size_t i = 1; i < toks.size(); ++i) {
        if (toks[i].size() != 1 || (toks[i][0] != 'F' && toks[i][0] != 'I' && toks[i][0] != 'U'))
          throw ParseError(line_start, "unknown PCD field type '" + std::string(toks[i]) + "'");
        types.push_back(toks[i][0]);
      }
    } else if (kw == "COUNT") {
      for (std::size_t i = 1; i < toks.size(); ++i)
        if (io::detail::parse_int(toks[i], line_start) != 1)
          throw ParseError(line_start, "PCD COUNT != 1 is not supported");
    } else if (kw == "WIDTH") {
      width = static_cast<std::size_t>(io::detail::parse_int(toks[1], line_start));
      have_width = true;
    } else if (kw == "HEIGHT") {
      height = static_cast<std::size_t>(io::detail::parse_int(toks[1], line_start));
    } else if (kw == "VIEWPOINT") {
      continue;
    } else if (kw == "POINTS") {
      h.points = static_cast<std::size_t>(io::detail::parse_int(toks[1], line_start));
      have_points = true;
    } else if (kw == "DATA") {
      if (toks.size() < 2) throw ParseError(line_start, "malformed DATA line");
      if (toks[1] == "ascii") h.binary = false;
      else if (toks[1] == "binary") h.binary = true;
      else if (toks[1] == "binary_compressed")
        throw ParseError(line_start, "binary_compressed PCD is not supported");
      else throw ParseError(line_start, "unknown DATA mode '" + std::string(toks[1]) + "'");
      break;
    } else {
      throw ParseError(line_start, "unknown PCD header keyword '" + std::string(kw) + "'");
    }
  }
  if (field_names.empty()) throw Error("no position data");
  if (!have_points) {
    if (!have_width) throw ParseError(buf.pos(), "PCD header missing POINTS/WIDTH");
    h.points = width * height;
  }
  if (sizes.size() != field_names.size() || types.size() != field_names.size())
    throw ParseError(buf.pos(), "PCD FIELDS/SIZE/TYPE arity mismatch");
  for (std::size_t i = 0; i < field_names.size(); ++i) {
    h.fields.push_back({field_names[i], types[i], sizes[i]});
  }
  return h;
}

inline double read_binary_field(FileBuffer& buf, const Field& f) {
  switch (f.type) {
    case 'F':
      if (f.size == 4) { float v; buf.read_raw(&v, 4); return v; }
      if (f.size == 8) { double v; buf.read_raw(&v, 8); return v; }
      break;
    case 'I':
      if (f.size == 1) { std::int8_t v; buf.read_raw(&v, 1); return v; }
      if (f.size == 2) { std::int16_t v; buf.read_raw(&v, 2); return v; }
      if (f.size == 4) { std::int32_t v; buf.read_raw(&v, 4); return v; }
      if (f.size == 8) { std::int64_t v; buf.read_raw(&v, 8); return static_cast<double>(v); }
      break;
    case 'U':
      if (f.size == 1) { std::uint8_t v; buf.read_raw(&v, 1); return v; }
      if (f.size == 2) { std::uint16_t v; buf.read_raw(&v, 2); return v; }
      if (f.size == 4) { std::uint32_t v; buf.read_raw(&v, 4); return v; }
      if (f.size == 8) { std::uint64_t v; buf.read_raw(&v, 8); return static_cast<double>(v); }
      break;
  }
  throw ParseError(buf.pos(), "unsupported PCD field type/size combination");
}

/// PCL packs rgb as an int shoved into float bits; ascii files print the
/// float value. Recover the packed integer either way.
inline std::uint32_t rgb_bits(double value, char type) {
  if (type == 'F') {
    const float f = static_cast<float>(value);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    return bits;
  }
  return static_cast<std::uint32_t>(value);
}

}  // namespace detail

inline PointCloud read_cloud(detail::FileBuffer buf, ReadStats* stats = nullptr) {
  using namespace detail;
  Header h = parse_header(buf);

  int ix = -1, iy = -1, iz = -1, irgb = -1;
  std::vector<int> attr_cols;
  for (std::size_t i = 0; i < h.fields.size(); ++i) {
    const auto& f = h.fields[i];
    if (f.name == "x") ix = static_cast<int>(i);
    else if (f.name == "y") iy = static_cast<int>(i);
    else if (f.name == "z") iz = static_cast<int>(i);
    else if (f.name == "rgb") irgb = static_cast<int>(i);
    else attr_cols.push_back(static_cast<int>(i));
  }
  if (ix < 0 || iy < 0 || iz < 0) throw Error("no position data");

  PointCloud cloud;
  for (int c : attr_cols) {
    const auto& f = h.fields[static_cast<std::size_t>(c)];
    cloud.attributes.push_back(
        {f.name, f.type == 'F' ? AttrKind::Float64 : AttrKind::Int64, {}});
  }
  std::size_t r_at = 0;
  if (irgb >= 0) {
    r_at = cloud.attributes.size();
    cloud.attributes.push_back({"r", AttrKind::Int64, {}});
    cloud.attributes.push_back({"g", AttrKind::Int64, {}});
    cloud.attributes.push_back({"b", AttrKind::Int64, {}});
  }

  std::vector<double> row(h.fields.size());
  for (std::size_t n = 0; n < h.points; ++n) {
    if (h.binary) {
      for (std::size_t i = 0; i < h.fields.size(); ++i)
        row[i] = read_binary_field(buf, h.fields[i]);
    } else {
      const std::size_t line_start = buf.pos();
      const auto toks = io::detail::split_ws(buf.line());
      if (toks.size() != h.fields.size())
        throw ParseError(line_start, "PCD row has " + std::to_string(toks.size()) +
                                         " values, expected " +
                                         std::to_string(h.fields.size()));
      for (std::size_t i = 0; i < h.fields.size(); ++i)
        row[i] = io::detail::parse_double(toks[i], line_start);
    }
    const Vec3 p(row[static_cast<std::size_t>(ix)], row[static_cast<std::size_t>(iy)],
                 row[static_cast<std::size_t>(iz)]);
    if (!p.allFinite()) {
      if (stats) ++stats->dropped_nonfinite;
      continue;
    }
    cloud.positions.push_back(p);
    for (std::size_t k = 0; k < attr_cols.size(); ++k)
      cloud.attributes[k].values.push_back(row[static_cast<std::size_t>(attr_cols[k])]);
    if (irgb >= 0) {
      const std::uint32_t bits = rgb_bits(row[static_cast<std::size_t>(irgb)],
                                          h.fields[static_cast<std::size_t>(irgb)].type);
      cloud.attributes[r_at].values.push_back((bits >> 16) & 0xFF);
      cloud.attributes[r_at + 1].values.push_back((bits >> 8) & 0xFF);
      cloud.attributes[r_at + 2].values.push_back(bits & 0xFF);
    }
  }
  cloud.validate();
  return cloud;
}

inline std::string write_cloud(const PointCloud& cloud, bool binary) {
  std::string out;
  out += "# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\n";
  std::string fields = "FIELDS x y z", size = "SIZE 8 8 8", type = "TYPE F F F",
              count = "COUNT 1 1 1";
  for (const auto& a : cloud.attributes) {
    fields += " " + a.name;
    size += " 8";
    type += a.kind == AttrKind::Float64 ? " F" : " I";
    count += " 1";
  }
  out += fields + "\n" + size + "\n" + type + "\n" + count + "\n";
  out += "WIDTH " + std::to_string(cloud.size()) + "\nHEIGHT 1\n";
  out += "VIEWPOINT 0 0 0 1 0 0 0\n";
  out += "POINTS " + std::to_string(cloud.size()) + "\n";
  out += binary ? "DATA binary\n" : "DATA ascii\n";

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    if (binary) {
      out.append(reinterpret_cast<const char*>(p.data()), 24);
      for (const auto& a : cloud.attributes) {
        if (a.kind == AttrKind::Float64) {
          out.append(reinterpret_cast<const char*>(&a.values[i]), 8);
        } else {
          const auto v = static_cast<std::int64_t>(a.values[i]);
          out.append(reinterpret_cast<const char*>(&v), 8);
        }
      }
    } else {
      io::detail::append_g17(out, p.x());
      out += ' ';
      io::detail::append_g17(out, p.y());
      out += ' ';
      io::detail::append_g17(out, p.z());
      for (const auto& a : cloud.attributes) {
        out += ' ';
        if (a.kind == AttrKind::Int64)
          io::detail::append_int(out, static_cast<long long>(a.values[i]));
        else
          io::detail::append_g17(out, a.values[i]);
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace recomb::io::pcd
