// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// PLY reader/writer: ascii and binary_little_endian, element `vertex` with
// float/double x y z plus optional scalar properties, element `face` with a
// vertex index list. Unknown elements and list properties are skipped.

#pragma once

#include <recomb/io/common.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace recomb::io::ply {

namespace detail {

using io::detail::FileBuffer;

enum class ScalarType : std::uint8_t { I8, U8, I16, U16, I32, U32, F32, F64 };

inline std::size_t type_size(ScalarType t) {
  switch (t) {
    case ScalarType::I8:
    case ScalarType::U8: return 1;
    case ScalarType::I16:
    case ScalarType::U16: return 2;
    case ScalarType::I32:
    case ScalarType::U32:
    case ScalarType::F32: return 4;
    case ScalarType::F64: return 8;
  }
  return 0;
}

inline bool is_float_type(ScalarType t) {
  return t == ScalarType::F32 || t == ScalarType::F64;
}

inline std::optional<ScalarType> parse_type(std::string_view s) {
  if (s == "char" || s == "int8") return ScalarType::I8;
  if (s == "uchar" || s == "uint8") return ScalarType::U8;
  if (s == "short" || s == "int16") return ScalarType::I16;
  if (s == "ushort" || s == "uint16") return ScalarType::U16;
  if (s == "int" || s == "int32") return ScalarType::I32;
  if (s == "uint" || s == "uint32") return ScalarType::U32;
  if (s == "float" || s == "float32") return ScalarType::F32;
  if (s == "double" || s == "float64") return ScalarType::F64;
  return std::nullopt;
}

inline const char* type_keyword(ScalarType t) {
  switch (t) {
    case ScalarType::I8: return "char";
    case ScalarType::U8: return "uchar";
    case ScalarType::I16: return "short";
    case ScalarType::U16: return "ushort";
    case ScalarType::I32: return "int";
    case ScalarType::U32: return "uint";
    case ScalarType::F32: return "float";
    case ScalarType::F64: return "double";
  }
  return "double";
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::F64;
  bool is_list = false;
  ScalarType count_type = ScalarType::U8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  bool binary = false;
  std::vector<Element> elements;
  std::size_t data_offset = 0;
};

inline Header parse_header(FileBuffer& buf) {
  Header h;
  std::size_t line_start = buf.pos();
  auto first = buf.line();
  if (io::detail::trim(first) != "ply")
    throw ParseError(line_start, "not a PLY file (missing 'ply' magic)");

  bool have_format = false;
  bool done = false;
  while (!done) {
    line_start = buf.pos();
    const auto toks = io::detail::split_ws(buf.line());
    if (toks.empty()) continue;
    const auto& kw = toks[0];
    if (kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      if (toks.size() < 2) throw ParseError(line_start, "malformed format line");
      if (toks[1] == "ascii") h.binary = false;
      else if (toks[1] == "binary_little_endian") h.binary = true;
      else if (toks[1] == "binary_big_endian")
        throw ParseError(line_start, "binary_big_endian PLY is not supported");
      else throw ParseError(line_start, "unknown PLY format '" + std::string(toks[1]) + "'");
      have_format = true;
    } else if (kw == "element") {
      if (toks.size() != 3) throw ParseError(line_start, "malformed element line");
      Element e;
      e.name = std::string(toks[1]);
      const long long n = io::detail::parse_int(toks[2], line_start);
      if (n < 0) throw ParseError(line_start, "negative element count");
      e.count = static_cast<std::size_t>(n);
      h.elements.push_back(std::move(e));
    } else if (kw == "property") {
      if (h.elements.empty()) throw ParseError(line_start, "property before any element");
      Property p;
      if (toks.size() == 5 && toks[1] == "list") {
        const auto ct = parse_type(toks[2]);
        const auto vt = parse_type(toks[3]);
        if (!ct || !vt) throw ParseError(line_start, "unknown property type");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *vt;
        p.name = std::string(toks[4]);
      } else if (toks.size() == 3) {
        const auto t = parse_type(toks[1]);
        if (!t) throw ParseError(line_start, "unknown property type '" + std::string(toks[1]) + "'");
        p.type = *t;
        p.name = std::string(toks[2]);
      } else {
        throw ParseError(line_start, "malformed property line");
      }
      h.elements.back().properties.push_back(std::move(p));
    } else if (kw == "end_header") {
      done = true;
    } else {
      throw ParseError(line_start, "unknown header keyword '" + std::string(kw) + "'");
    }
  }
  if (!have_format) throw ParseError(line_start, "missing format line");
  h.data_offset = buf.pos();
  return h;
}

inline double read_binary_scalar(FileBuffer& buf, ScalarType t) {
  switch (t) {
    case ScalarType::I8: { std::int8_t v; buf.read_raw(&v, 1); return v; }
    case ScalarType::U8: { std::uint8_t v; buf.read_raw(&v, 1); return v; }
    case ScalarType::I16: { std::int16_t v; buf.read_raw(&v, 2); return v; }
    case ScalarType::U16: { std::uint16_t v; buf.read_raw(&v, 2); return v; }
    case ScalarType::I32: { std::int32_t v; buf.read_raw(&v, 4); return v; }
    case ScalarType::U32: { std::uint32_t v; buf.read_raw(&v, 4); return v; }
    case ScalarType::F32: { float v; buf.read_raw(&v, 4); return v; }
    case ScalarType::F64: { double v; buf.read_raw(&v, 8); return v; }
  }
  return 0.0;
}

inline void write_binary_scalar(std::string& out, ScalarType t, double v) {
  auto put = [&out](const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
  };
  switch (t) {
    case ScalarType::I8: { auto x = static_cast<std::int8_t>(v); put(&x, 1); break; }
    case ScalarType::U8: { auto x = static_cast<std::uint8_t>(v); put(&x, 1); break; }
    case ScalarType::I16: { auto x = static_cast<std::int16_t>(v); put(&x, 2); break; }
    case ScalarType::U16: { auto x = static_cast<std::uint16_t>(v); put(&x, 2); break; }
    case ScalarType::I32: { auto x = static_cast<std::int32_t>(v); put(&x, 4); break; }
    case ScalarType::U32: { auto x = static_cast<std::uint32_t>(v); put(&x, 4); break; }
    case ScalarType::F32: { auto x = static_cast<float>(v); put(&x, 4); break; }
    case ScalarType::F64: { put(&v, 8); break; }
  }
}

/// One element's worth of data, scalars only; list values are consumed and
/// handed to `on_list` (used for faces), or discarded when null.
template <typename OnRow, typename OnList>
void read_element(FileBuffer& buf, const Element& elem, bool binary, OnRow&& on_row,
                  OnList&& on_list) {
  std::vector<double> scalars(elem.properties.size(), 0.0);
  std::vector<double> list_values;
  for (std::size_t row = 0; row < elem.count; ++row) {
    if (binary) {
      for (std::size_t pi = 0; pi < elem.properties.size(); ++pi) {
        const auto& p = elem.properties[pi];
        if (p.is_list) {
          const auto n = static_cast<std::size_t>(read_binary_scalar(buf, p.count_type));
          list_values.clear();
          for (std::size_t k = 0; k < n; ++k)
            list_values.push_back(read_binary_scalar(buf, p.type));
          on_list(pi, list_values);
        } else {
          scalars[pi] = read_binary_scalar(buf, p.type);
        }
      }
    } else {
      const std::size_t line_start = buf.pos();
      const auto toks = io::detail::split_ws(buf.line());
      std::size_t cursor = 0;
      auto next_tok = [&]() -> std::string_view {
        if (cursor >= toks.size())
          throw ParseError(line_start, "row has too few values for element '" +
                                           elem.name + "'");
        return toks[cursor++];
      };
      for (std::size_t pi = 0; pi < elem.properties.size(); ++pi) {
        const auto& p = elem.properties[pi];
        if (p.is_list) {
          const auto n =
              static_cast<std::size_t>(io::detail::parse_double(next_tok(), line_start));
          list_values.clear();
          for (std::size_t k = 0; k < n; ++k)
            list_values.push_back(io::detail::parse_double(next_tok(), line_start));
          on_list(pi, list_values);
        } else {
          scalars[pi] = io::detail::parse_double(next_tok(), line_start);
        }
      }
      if (cursor != toks.size())
        throw ParseError(line_start, "row has trailing values for element '" +
                                         elem.name + "'");
    }
    on_row(scalars);
  }
}

}  // namespace detail

// ----------------------------------------------------------------------------
// Point clouds
// ----------------------------------------------------------------------------

inline PointCloud read_cloud(detail::FileBuffer buf, ReadStats* stats = nullptr) {
  using namespace detail;
  Header h = parse_header(buf);

  PointCloud cloud;
  bool saw_vertex = false;
  for (const auto& elem : h.elements) {
    if (elem.name != "vertex") {
      // skip foreign elements, their layout is fully described by the header
      read_element(buf, elem, h.binary, [](const auto&) {}, [](std::size_t, const auto&) {});
      continue;
    }
    saw_vertex = true;
    int ix = -1, iy = -1, iz = -1;
    std::vector<int> attr_cols;
    for (std::size_t pi = 0; pi < elem.properties.size(); ++pi) {
      const auto& p = elem.properties[pi];
      if (p.is_list) continue;  // list property on vertices: consumed, not stored
      if (p.name == "x") ix = static_cast<int>(pi);
      else if (p.name == "y") iy = static_cast<int>(pi);
      else if (p.name == "z") iz = static_cast<int>(pi);
      else attr_cols.push_back(static_cast<int>(pi));
    }
    if (ix < 0 || iy < 0 || iz < 0) throw Error("no position data");
    for (int c : attr_cols) {
      const auto& p = elem.properties[static_cast<std::size_t>(c)];
      cloud.attributes.push_back(
          {p.name, is_float_type(p.type) ? AttrKind::Float64 : AttrKind::Int64, {}});
    }
    read_element(
        buf, elem, h.binary,
        [&](const std::vector<double>& row) {
          const Vec3 p(row[static_cast<std::size_t>(ix)], row[static_cast<std::size_t>(iy)],
                       row[static_cast<std::size_t>(iz)]);
          if (!p.allFinite()) {
            if (stats) ++stats->dropped_nonfinite;
            return;
          }
          cloud.positions.push_back(p);
          for (std::size_t k = 0; k < attr_cols.size(); ++k)
            cloud.attributes[k].values.push_back(
                row[static_cast<std::size_t>(attr_cols[k])]);
        },
        [](std::size_t, const auto&) {});
  }
  if (!saw_vertex) throw Error("no position data");
  cloud.validate();
  return cloud;
}

inline std::string write_cloud(const PointCloud& cloud, bool binary) {
  using namespace detail;
  std::string out;
  out += "ply\n";
  out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  std::vector<ScalarType> attr_types;
  for (const auto& a : cloud.attributes) {
    // PLY has no 64-bit integer; integer attributes that fit int32 keep an
    // integer declared type, anything else is stored as double.
    ScalarType t = ScalarType::F64;
    if (a.kind == AttrKind::Int64) {
      bool fits = true;
      for (double v : a.values)
        if (v < -2147483648.0 || v > 2147483647.0 || v != std::floor(v)) fits = false;
      if (fits) t = ScalarType::I32;
    }
    attr_types.push_back(t);
    out += "property ";
    out += type_keyword(t);
    out += " " + a.name + "\n";
  }
  out += "end_header\n";

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    if (binary) {
      write_binary_scalar(out, ScalarType::F64, p.x());
      write_binary_scalar(out, ScalarType::F64, p.y());
      write_binary_scalar(out, ScalarType::F64, p.z());
      for (std::size_t k = 0; k < cloud.attributes.size(); ++k)
        write_binary_scalar(out, attr_types[k], cloud.attributes[k].values[i]);
    } else {
      io::detail::append_g17(out, p.x());
      out += ' ';
      io::detail::append_g17(out, p.y());
      out += ' ';
      io::detail::append_g17(out, p.z());
      for (std::size_t k = 0; k < cloud.attributes.size(); ++k) {
        out += ' ';
        if (attr_types[k] == ScalarType::I32)
          io::detail::append_int(out, static_cast<long long>(cloud.attributes[k].values[i]));
        else
          io::detail::append_g17(out, cloud.attributes[k].values[i]);
      }
      out += '\n';
    }
  }
  return out;
}

// ----------------------------------------------------------------------------
// Meshes
// ----------------------------------------------------------------------------

inline TriangleMesh read_mesh(detail::FileBuffer buf, ReadStats* stats = nullptr) {
  using namespace detail;
  Header h = parse_header(buf);
  TriangleMesh mesh;

  auto add_face = [&](const std::vector<double>& idx) {
    if (idx.size() < 3) return;
    // fan split for quads and larger polygons
    for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
      const auto a = static_cast<std::uint32_t>(idx[0]);
      const auto b = static_cast<std::uint32_t>(idx[k]);
      const auto c = static_cast<std::uint32_t>(idx[k + 1]);
      if (a == b || b == c || a == c) {
        if (stats) ++stats->dropped_degenerate;
        continue;
      }
      mesh.triangles.push_back({a, b, c});
    }
  };

  for (const auto& elem : h.elements) {
    if (elem.name == "vertex") {
      int ix = -1, iy = -1, iz = -1;
      for (std::size_t pi = 0; pi < elem.properties.size(); ++pi) {
        const auto& p = elem.properties[pi];
        if (p.is_list) continue;
        if (p.name == "x") ix = static_cast<int>(pi);
        else if (p.name == "y") iy = static_cast<int>(pi);
        else if (p.name == "z") iz = static_cast<int>(pi);
      }
      if (ix < 0 || iy < 0 || iz < 0) throw Error("no position data");
      read_element(
          buf, elem, h.binary,
          [&](const std::vector<double>& row) {
            mesh.vertices.emplace_back(row[static_cast<std::size_t>(ix)],
                                       row[static_cast<std::size_t>(iy)],
                                       row[static_cast<std::size_t>(iz)]);
          },
          [](std::size_t, const auto&) {});
    } else if (elem.name == "face") {
      read_element(buf, elem, h.binary, [](const auto&) {},
                   [&](std::size_t, const std::vector<double>& idx) { add_face(idx); });
    } else {
      read_element(buf, elem, h.binary, [](const auto&) {}, [](std::size_t, const auto&) {});
    }
  }
  mesh.validate();
  return mesh;
}

inline std::string write_mesh(const TriangleMesh& mesh, bool binary) {
  using namespace detail;
  std::string out;
  out += "ply\n";
  out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
  out += "element vertex " + std::to_string(mesh.vertices.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  out += "element face " + std::to_string(mesh.triangles.size()) + "\n";
  out += "property list uchar int vertex_indices\n";
  out += "end_header\n";
  for (const auto& v : mesh.vertices) {
    if (binary) {
      write_binary_scalar(out, ScalarType::F64, v.x());
      write_binary_scalar(out, ScalarType::F64, v.y());
      write_binary_scalar(out, ScalarType::F64, v.z());
    } else {
      io::detail::append_g17(out, v.x());
      out += ' ';
      io::detail::append_g17(out, v.y());
      out += ' ';
      io::detail::append_g17(out, v.z());
      out += '\n';
    }
  }
  for (const auto& t : mesh.triangles) {
    if (binary) {
      write_binary_scalar(out, ScalarType::U8, 3);
      for (int k = 0; k < 3; ++k)
        write_binary_scalar(out, ScalarType::I32, static_cast<double>(t[static_cast<std::size_t>(k)]));
    } else {
      out += "3";
      for (int k = 0; k < 3; ++k) {
        out += ' ';
        io::detail::append_int(out, t[static_cast<std::size_t>(k)]);
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace recomb::io::ply
