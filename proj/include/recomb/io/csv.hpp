// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// Comma-separated clouds with a mandatory header row naming at least x,y,z.
// Extra columns become Float64 attributes (declared integer-ness does not
// survive this format).

#pragma once

#include <recomb/io/common.hpp>

#include <string>
#include <vector>

namespace recomb::io::csv {

inline PointCloud read_cloud(detail::FileBuffer buf, ReadStats* stats = nullptr) {
  const std::size_t header_start = buf.pos();
  const auto header = detail::split_char(detail::trim(buf.line()), ',');
  int ix = -1, iy = -1, iz = -1;
  std::vector<int> attr_cols;
  PointCloud cloud;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = detail::trim(header[i]);
    if (name == "x") ix = static_cast<int>(i);
    else if (name == "y") iy = static_cast<int>(i);
    else if (name == "z") iz = static_cast<int>(i);
    else {
      attr_cols.push_back(static_cast<int>(i));
      cloud.attributes.push_back({std::string(name), AttrKind::Float64, {}});
    }
  }
  if (ix < 0 || iy < 0 || iz < 0) throw Error("no position data");
  if (header.empty()) throw ParseError(header_start, "missing CSV header row");

  while (!buf.eof()) {
    const std::size_t line_start = buf.pos();
    const auto line = detail::trim(buf.line());
    if (line.empty()) continue;
    const auto cells = detail::split_char(line, ',');
    if (cells.size() != header.size())
      throw ParseError(line_start, "CSV row has " + std::to_string(cells.size()) +
                                       " cells, expected " + std::to_string(header.size()));
    auto cell = [&](int i) {
      return detail::parse_double(detail::trim(cells[static_cast<std::size_t>(i)]),
                                  line_start);
    };
    const Vec3 p(cell(ix), cell(iy), cell(iz));
    if (!p.allFinite()) {
      if (stats) ++stats->dropped_nonfinite;
      continue;
    }
    cloud.positions.push_back(p);
    for (std::size_t k = 0; k < attr_cols.size(); ++k)
      cloud.attributes[k].values.push_back(cell(attr_cols[k]));
  }
  cloud.validate();
  return cloud;
}

inline std::string write_cloud(const PointCloud& cloud) {
  std::string out = "x,y,z";
  for (const auto& a : cloud.attributes) out += "," + a.name;
  out += '\n';
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    detail::append_g17(out, cloud.positions[i].x());
    out += ',';
    detail::append_g17(out, cloud.positions[i].y());
    out += ',';
    detail::append_g17(out, cloud.positions[i].z());
    for (const auto& a : cloud.attributes) {
      out += ',';
      detail::append_g17(out, a.values[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace recomb::io::csv
