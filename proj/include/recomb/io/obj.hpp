// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// Wavefront OBJ: v/f records only. Faces with more than three vertices are
// fan-split; negative indices are resolved relative to the vertices read so
// far, per the OBJ convention.

#pragma once

#include <recomb/io/common.hpp>

#include <string>
#include <vector>

namespace recomb::io::obj {

inline TriangleMesh read_mesh(detail::FileBuffer buf, ReadStats* stats = nullptr) {
  TriangleMesh mesh;
  std::vector<long long> face;

  while (!buf.eof()) {
    const std::size_t line_start = buf.pos();
    const auto toks = detail::split_ws(buf.line());
    if (toks.empty() || toks[0][0] == '#') continue;
    if (toks[0] == "v") {
      if (toks.size() < 4) throw ParseError(line_start, "malformed vertex line");
      mesh.vertices.emplace_back(detail::parse_double(toks[1], line_start),
                                 detail::parse_double(toks[2], line_start),
                                 detail::parse_double(toks[3], line_start));
    } else if (toks[0] == "f") {
      if (toks.size() < 4) throw ParseError(line_start, "face with fewer than 3 vertices");
      face.clear();
      for (std::size_t i = 1; i < toks.size(); ++i) {
        // index may be "v", "v/vt", "v//vn" or "v/vt/vn"
        auto tok = toks[i];
        const auto slash = tok.find('/');
        if (slash != std::string_view::npos) tok = tok.substr(0, slash);
        long long idx = detail::parse_int(tok, line_start);
        if (idx < 0) idx = static_cast<long long>(mesh.vertices.size()) + idx + 1;
        if (idx < 1 || idx > static_cast<long long>(mesh.vertices.size()))
          throw ParseError(line_start, "face index " + std::to_string(idx) +
                                           " out of range");
        face.push_back(idx - 1);
      }
      for (std::size_t k = 1; k + 1 < face.size(); ++k) {
        const auto a = static_cast<std::uint32_t>(face[0]);
        const auto b = static_cast<std::uint32_t>(face[k]);
        const auto c = static_cast<std::uint32_t>(face[k + 1]);
        if (a == b || b == c || a == c) {
          if (stats) ++stats->dropped_degenerate;
          continue;
        }
        mesh.triangles.push_back({a, b, c});
      }
    }
    // all other record types (vn, vt, usemtl, o, g, s, mtllib, ...) skipped
  }
  mesh.validate();
  return mesh;
}

inline std::string write_mesh(const TriangleMesh& mesh) {
  std::string out;
  for (const auto& v : mesh.vertices) {
    out += "v ";
    detail::append_g17(out, v.x());
    out += ' ';
    detail::append_g17(out, v.y());
    out += ' ';
    detail::append_g17(out, v.z());
    out += '\n';
  }
  for (const auto& t : mesh.triangles) {
    out += "f ";
    detail::append_int(out, t[0] + 1);
    out += ' ';
    detail::append_int(out, t[1] + 1);
    out += ' ';
    detail::append_int(out, t[2] + 1);
    out += '\n';
  }
  return out;
}

}  // namespace recomb::io::obj
