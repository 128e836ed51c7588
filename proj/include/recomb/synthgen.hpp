// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic worlds and a virtual spherical-scan range sensor, used as the
// desk-scale stand-in for lab and field captures in tests. The scanner is an
// idealized range sensor: no intensity model, no reflectivity phenomena —
// intensity is a constant placeholder by design.

#pragma once

#include <recomb/core.hpp>
#include <recomb/io/common.hpp>
#include <recomb/spatial.hpp>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace recomb::synth {

// ----------------------------------------------------------------------------
// Mesh construction helpers
// ----------------------------------------------------------------------------

namespace detail {

using Vec2 = Eigen::Vector2d;

inline double shoelace(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

inline double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

inline bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const double d1 = cross2(a, b, p);
  const double d2 = cross2(b, c, p);
  const double d3 = cross2(c, a, p);
  const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
  const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
  return !(has_neg && has_pos);
}

/// Ear clipping for a simple polygon, any winding.
inline std::vector<std::array<std::size_t, 3>> triangulate(std::vector<Vec2> poly) {
  std::vector<std::size_t> idx(poly.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (shoelace(poly) < 0.0) std::reverse(idx.begin(), idx.end());

  std::vector<std::array<std::size_t, 3>> tris;
  while (idx.size() > 3) {
    bool clipped = false;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const std::size_t ia = idx[(i + idx.size() - 1) % idx.size()];
      const std::size_t ib = idx[i];
      const std::size_t ic = idx[(i + 1) % idx.size()];
      const Vec2 &a = poly[ia], &b = poly[ib], &c = poly[ic];
      if (cross2(a, b, c) <= 1e-15) continue;  // reflex or collinear
      bool contains_other = false;
      for (std::size_t j : idx) {
        if (j == ia || j == ib || j == ic) continue;
        if (point_in_triangle(poly[j], a, b, c)) {
          contains_other = true;
          break;
        }
      }
      if (contains_other) continue;
      tris.push_back({ia, ib, ic});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) throw Error("polygon triangulation failed (not a simple polygon?)");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

/// Extrude a simple polygon in the XZ plane along Y into a watertight prism.
inline TriangleMesh extrude_xz_polygon(const std::vector<Vec2>& poly, double y_half) {
  TriangleMesh mesh;
  const std::size_t n = poly.size();
  for (double y : {+y_half, -y_half})
    for (const auto& p : poly) mesh.vertices.emplace_back(p.x(), y, p.y());
  const auto cap = triangulate(poly);
  const auto off = static_cast<std::uint32_t>(n);
  for (const auto& t : cap) {
    mesh.triangles.push_back({static_cast<std::uint32_t>(t[0]),
                              static_cast<std::uint32_t>(t[1]),
                              static_cast<std::uint32_t>(t[2])});
    mesh.triangles.push_back({off + static_cast<std::uint32_t>(t[0]),
                              off + static_cast<std::uint32_t>(t[2]),
                              off + static_cast<std::uint32_t>(t[1])});
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % static_cast<std::uint32_t>(n);
    mesh.triangles.push_back({i, j, off + j});
    mesh.triangles.push_back({i, off + j, off + i});
  }
  return mesh;
}

inline TriangleMesh make_box(const Vec3& center, const Vec3& size, double yaw) {
  TriangleMesh mesh;
  const Vec3 h = 0.5 * size;
  const Mat3 rot = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  for (int i = 0; i < 8; ++i) {
    const Vec3 corner(i & 1 ? h.x() : -h.x(), i & 2 ? h.y() : -h.y(),
                      i & 4 ? h.z() : -h.z());
    mesh.vertices.push_back(center + rot * corner);
  }
  const std::uint32_t quads[6][4] = {
      {0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1}, {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};
  for (const auto& q : quads) {
    mesh.triangles.push_back({q[0], q[1], q[2]});
    mesh.triangles.push_back({q[0], q[2], q[3]});
  }
  return mesh;
}

inline TriangleMesh make_sphere(const Vec3& center, double radius, int stacks = 12,
                                int sectors = 24) {
  TriangleMesh mesh;
  mesh.vertices.push_back(center + Vec3(0, 0, radius));  // north pole
  for (int s = 1; s < stacks; ++s) {
    const double phi = std::numbers::pi * s / stacks;  // from north
    for (int t = 0; t < sectors; ++t) {
      const double theta = 2.0 * std::numbers::pi * t / sectors;
      mesh.vertices.push_back(center + radius * Vec3(std::sin(phi) * std::cos(theta),
                                                     std::sin(phi) * std::sin(theta),
                                                     std::cos(phi)));
    }
  }
  mesh.vertices.push_back(center - Vec3(0, 0, radius));  // south pole
  const auto ring = [&](int s, int t) {
    return static_cast<std::uint32_t>(1 + (s - 1) * sectors + (t % sectors));
  };
  const auto south = static_cast<std::uint32_t>(mesh.vertices.size() - 1);
  for (int t = 0; t < sectors; ++t) {
    mesh.triangles.push_back({0, ring(1, t), ring(1, t + 1)});
    mesh.triangles.push_back({south, ring(stacks - 1, t + 1), ring(stacks - 1, t)});
  }
  for (int s = 1; s + 1 < stacks; ++s) {
    for (int t = 0; t < sectors; ++t) {
      mesh.triangles.push_back({ring(s, t), ring(s + 1, t), ring(s + 1, t + 1)});
      mesh.triangles.push_back({ring(s, t), ring(s + 1, t + 1), ring(s, t + 1)});
    }
  }
  return mesh;
}

/// Side-view outline of a walking person, ~1.8 m tall, facing +x. The nose,
/// leading arm and front toe make it directional: no Z rotation maps it onto
/// itself.
inline const std::vector<Vec2>& humanoid_silhouette() {
  static const std::vector<Vec2> outline = {
      {-0.18, 0.00}, {-0.06, 0.00}, {-0.01, 0.55}, {0.06, 0.00},  {0.20, 0.00},
      {0.16, 0.50},  {0.14, 0.85},  {0.38, 1.02},  {0.40, 1.12},  {0.20, 1.18},
      {0.15, 1.28},  {0.17, 1.48},  {0.22, 1.56},  {0.15, 1.72},  {0.03, 1.80},
      {-0.11, 1.70}, {-0.10, 1.50}, {-0.17, 1.35}, {-0.13, 0.85}, {-0.20, 0.45},
  };
  return outline;
}

}  // namespace detail

// ----------------------------------------------------------------------------
// Primitives and worlds
// ----------------------------------------------------------------------------

struct Primitive {
  enum class Kind { Plane, Box, Sphere, Humanoid, LShape };
  Kind kind = Kind::Box;
  Vec3 position = Vec3::Zero();  // anchor: plane = top-face center, box/sphere =
                                 // center, humanoid/lshape = base center
  Vec3 size = Vec3::Ones();
  double yaw = 0.0;

  static constexpr double kPlaneThickness = 0.05;

  static Primitive plane(double cx, double cy, double z_top, double sx, double sy) {
    Primitive p;
    p.kind = Kind::Plane;
    p.position = Vec3(cx, cy, z_top);
    p.size = Vec3(sx, sy, kPlaneThickness);
    return p;
  }
  static Primitive box(const Vec3& center, const Vec3& size, double yaw = 0.0) {
    Primitive p;
    p.kind = Kind::Box;
    p.position = center;
    p.size = size;
    p.yaw = yaw;
    return p;
  }
  static Primitive sphere(const Vec3& center, double radius) {
    Primitive p;
    p.kind = Kind::Sphere;
    p.position = center;
    p.size = Vec3::Constant(radius);
    return p;
  }
  static Primitive humanoid(double cx, double cy, double z_base, double yaw = 0.0) {
    Primitive p;
    p.kind = Kind::Humanoid;
    p.position = Vec3(cx, cy, z_base);
    p.yaw = yaw;
    return p;
  }
  static Primitive lshape(double cx, double cy, double z_base, double yaw = 0.0) {
    Primitive p;
    p.kind = Kind::LShape;
    p.position = Vec3(cx, cy, z_base);
    p.yaw = yaw;
    return p;
  }

  std::string kind_name() const {
    switch (kind) {
      case Kind::Plane: return "plane";
      case Kind::Box: return "box";
      case Kind::Sphere: return "sphere";
      case Kind::Humanoid: return "humanoid";
      case Kind::LShape: return "lshape";
    }
    return "unknown";
  }

  /// Exact watertight triangle mesh of this primitive, posed.
  TriangleMesh mesh() const {
    switch (kind) {
      case Kind::Plane:
        return detail::make_box(position - Vec3(0, 0, 0.5 * kPlaneThickness), size, 0.0);
      case Kind::Box:
        return detail::make_box(position, size, yaw);
      case Kind::Sphere:
        return detail::make_sphere(position, size.x());
      case Kind::Humanoid: {
        TriangleMesh m = detail::extrude_xz_polygon(detail::humanoid_silhouette(), 0.16);
        const auto pose = SimilarityTransform::translate(position) *
                          SimilarityTransform::rotate_z(yaw);
        return transform_mesh(m, pose);
      }
      case Kind::LShape: {
        // two perpendicular arms of unequal height: chiral, its mirror is
        // not reachable by any rotation
        TriangleMesh a = detail::make_box(Vec3(0.5, 0.1, 0.5), Vec3(1.0, 0.2, 1.0), 0.0);
        TriangleMesh b = detail::make_box(Vec3(0.1, 0.5, 0.25), Vec3(0.2, 0.6, 0.5), 0.0);
        const auto base = static_cast<std::uint32_t>(a.vertices.size());
        a.vertices.insert(a.vertices.end(), b.vertices.begin(), b.vertices.end());
        for (const auto& t : b.triangles)
          a.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
        const auto pose = SimilarityTransform::translate(position) *
                          SimilarityTransform::rotate_z(yaw);
        return transform_mesh(a, pose);
      }
    }
    throw Error("unknown primitive kind");
  }
};

struct SyntheticWorld {
  std::vector<Primitive> primitives;

  TriangleMesh combined_mesh() const {
    TriangleMesh all;
    for (const auto& p : primitives) {
      const TriangleMesh m = p.mesh();
      const auto base = static_cast<std::uint32_t>(all.vertices.size());
      all.vertices.insert(all.vertices.end(), m.vertices.begin(), m.vertices.end());
      for (const auto& t : m.triangles)
        all.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
    }
    return all;
  }
};

// ----------------------------------------------------------------------------
// Virtual scanner
// ----------------------------------------------------------------------------

struct VirtualScanner {
  int channels = 128;
  int horizontal_resolution = 1024;
  double vertical_fov_min_deg = -22.5;
  double vertical_fov_max_deg = 22.5;
  double max_range = 120.0;   // meters
  double noise_sigma = 0.0;   // radial Gaussian noise, meters

  void validate() const {
    if (channels < 1 || horizontal_resolution < 1)
      throw Error("scanner needs at least one channel and one azimuth step");
    if (!(max_range > 0.0)) throw Error("max_range must be positive");
    if (noise_sigma < 0.0) throw Error("noise sigma must be non-negative");
  }
};

namespace detail {

inline PointCloud sweep(const spatial::Bvh& bvh, const VirtualScanner& scanner,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, scanner.noise_sigma);

  PointCloud cloud;
  cloud.attributes.push_back({"intensity", AttrKind::Float64, {}});
  cloud.attributes.push_back({"ring", AttrKind::Int64, {}});

  for (int ch = 0; ch < scanner.channels; ++ch) {
    const double frac =
        scanner.channels == 1 ? 0.5 : static_cast<double>(ch) / (scanner.channels - 1);
    const double elev = deg_to_rad(scanner.vertical_fov_min_deg +
                                   frac * (scanner.vertical_fov_max_deg -
                                           scanner.vertical_fov_min_deg));
    const double ce = std::cos(elev), se = std::sin(elev);
    for (int j = 0; j < scanner.horizontal_resolution; ++j) {
      const double az = 2.0 * std::numbers::pi * j / scanner.horizontal_resolution;
      const Vec3 dir(ce * std::cos(az), ce * std::sin(az), se);
      const double t = bvh.cast_ray({Vec3::Zero(), dir});
      if (!(t <= scanner.max_range)) continue;
      double range = t;
      if (scanner.noise_sigma > 0.0) range = std::max(1e-6, range + noise(rng));
      cloud.positions.push_back(range * dir);
      cloud.attributes[0].values.push_back(100.0);
      cloud.attributes[1].values.push_back(ch);
    }
  }
  return cloud;
}

}  // namespace detail

/// One spherical sweep from the origin: a beam per (channel, azimuth step),
/// nearest hit kept when within range, misses omitted. Channel order is
/// bottom-up; output carries constant `intensity` and integer `ring`.
/// Deterministic for a given seed.
inline PointCloud render_scan(const SyntheticWorld& world, const VirtualScanner& scanner,
                              std::uint64_t seed = 0) {
  scanner.validate();
  if (world.primitives.empty()) throw Error("cannot render an empty world");
  const spatial::Bvh bvh(world.combined_mesh());
  return detail::sweep(bvh, scanner, seed);
}

/// Sweep against explicit geometry (already posed in the sensor frame).
inline PointCloud render_scan(const TriangleMesh& mesh, const VirtualScanner& scanner,
                              std::uint64_t seed = 0) {
  scanner.validate();
  const spatial::Bvh bvh(mesh);
  return detail::sweep(bvh, scanner, seed);
}

/// Concatenate meshes; triangles keep their relative order.
inline TriangleMesh merge_meshes(const TriangleMesh& a, const TriangleMesh& b) {
  TriangleMesh out = a;
  const auto base = static_cast<std::uint32_t>(out.vertices.size());
  out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
  for (const auto& t : b.triangles)
    out.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  return out;
}

// ----------------------------------------------------------------------------
// Laboratory capture
// ----------------------------------------------------------------------------

struct LabSetup {
  double sensor_height = 1.0;  // meters above the (empty) lab floor
};

struct LabCapture {
  ObjectRecord record;
  TriangleMesh mesh;  // ground-truth mesh, posed in the sensor frame
};

/// Stage a single primitive at the given range straight ahead of the sensor
/// (azimuth 0), base on the lab floor, and scan it. The lab is otherwise
/// empty so the cloud contains only object returns; metadata comes from
/// ground truth.
inline LabCapture render_object_in_lab(const Primitive& primitive,
                                       const VirtualScanner& scanner, double range,
                                       const LabSetup& lab = {},
                                       const std::string& mesh_id = "synthetic",
                                       const std::string& pose_tag = "default",
                                       std::uint64_t seed = 0) {
  if (!(range > 0.0) || range > scanner.max_range)
    throw Error("lab range must be positive and within scanner range");
  scanner.validate();
  TriangleMesh mesh = primitive.mesh();
  const Aabb bounds = Aabb::of_points(mesh.vertices);
  const Vec3 anchor(0.5 * (bounds.min.x() + bounds.max.x()),
                    0.5 * (bounds.min.y() + bounds.max.y()), bounds.min.z());
  const auto shift =
      SimilarityTransform::translate(Vec3(range, 0.0, -lab.sensor_height) - anchor);
  mesh = transform_mesh(mesh, shift);

  const spatial::Bvh bvh(mesh);
  PointCloud cloud = detail::sweep(bvh, scanner, seed);
  if (cloud.empty()) throw Error("object produced no returns at this range");

  LabCapture capture;
  capture.record.cloud = std::move(cloud);
  capture.record.relative_translation = centroid(capture.record.cloud);
  capture.record.yaw = primitive.yaw;
  capture.record.mesh_id = mesh_id;
  capture.record.object_type = primitive.kind_name() + "/" + pose_tag;
  capture.record.pose_tag = pose_tag;
  capture.mesh = std::move(mesh);
  return capture;
}

// ----------------------------------------------------------------------------
// Declarative world files: one primitive per line
// ----------------------------------------------------------------------------
//
//   plane    <cx> <cy> <z_top> <size_x> <size_y>
//   box      <cx> <cy> <cz> <sx> <sy> <sz> [yaw_deg]
//   sphere   <cx> <cy> <cz> <radius>
//   humanoid <cx> <cy> <z_base> [yaw_deg]
//   lshape   <cx> <cy> <z_base> [yaw_deg]
//
// Blank lines and lines starting with # are skipped.

inline SyntheticWorld parse_world(const std::string& text) {
  SyntheticWorld world;
  io::detail::FileBuffer buf = io::detail::FileBuffer::from_string(text);
  while (!buf.eof()) {
    const std::size_t line_start = buf.pos();
    const auto toks = io::detail::split_ws(buf.line());
    if (toks.empty() || toks[0][0] == '#') continue;
    auto num = [&](std::size_t i) {
      if (i >= toks.size())
        throw io::ParseError(line_start, "missing value in world line");
      return io::detail::parse_double(toks[i], line_start);
    };
    const auto& kind = toks[0];
    if (kind == "plane") {
      world.primitives.push_back(Primitive::plane(num(1), num(2), num(3), num(4), num(5)));
    } else if (kind == "box") {
      const double yaw = toks.size() > 7 ? deg_to_rad(num(7)) : 0.0;
      world.primitives.push_back(Primitive::box(Vec3(num(1), num(2), num(3)),
                                                Vec3(num(4), num(5), num(6)), yaw));
    } else if (kind == "sphere") {
      world.primitives.push_back(Primitive::sphere(Vec3(num(1), num(2), num(3)), num(4)));
    } else if (kind == "humanoid") {
      const double yaw = toks.size() > 4 ? deg_to_rad(num(4)) : 0.0;
      world.primitives.push_back(Primitive::humanoid(num(1), num(2), num(3), yaw));
    } else if (kind == "lshape") {
      const double yaw = toks.size() > 4 ? deg_to_rad(num(4)) : 0.0;
      world.primitives.push_back(Primitive::lshape(num(1), num(2), num(3), yaw));
    } else {
      throw io::ParseError(line_start, "unknown primitive '" + std::string(kind) + "'");
    }
  }
  return world;
}

inline SyntheticWorld parse_world_file(const std::filesystem::path& path) {
  auto buf = io::detail::FileBuffer::from_file(path);
  return parse_world(std::string(buf.all()));
}

}  // namespace recomb::synth
