// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// Core geometry and record types shared by every other module. Everything
// works in the sensor-centered frame: origin at the sensor optical center,
// right-handed, Z up, meters. File loaders normalize into this frame.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace recomb {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wrap an angle into [-pi, pi).
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0.0) a += two_pi;
  return a - std::numbers::pi;
}

inline double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

// ============================================================================
// PointCloud
// ============================================================================

/// Storage class of a per-point attribute. Values are held as doubles either
/// way (a double represents every int32/float exactly); the kind records the
/// source family so writers can emit a matching declared type and schema
/// merges can detect genuine type conflicts.
enum class AttrKind : std::uint8_t { Float64, Int64 };

struct Attribute {
  std::string name;
  AttrKind kind = AttrKind::Float64;
  std::vector<double> values;
};

/// Point cloud with named parallel attribute arrays (columnar). Positions are
/// 64-bit; 32-bit file formats are widened on load. Immutable by convention
/// once handed to a pipeline stage.
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Attribute> attributes;  // order is meaningful and preserved

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }

  const Attribute* find_attribute(const std::string& name) const {
    for (const auto& a : attributes)
      if (a.name == name) return &a;
    return nullptr;
  }

  Attribute* find_attribute(const std::string& name) {
    for (auto& a : attributes)
      if (a.name == name) return &a;
    return nullptr;
  }

  /// Append a new attribute array; rejects duplicate names and length
  /// mismatches.
  void add_attribute(std::string name, AttrKind kind, std::vector<double> values) {
    if (find_attribute(name))
      throw Error("duplicate attribute name: " + name);
    if (values.size() != positions.size())
      throw Error("attribute '" + name + "' length " + std::to_string(values.size()) +
                  " does not match point count " + std::to_string(positions.size()));
    attributes.push_back(Attribute{std::move(name), kind, std::move(values)});
  }

  /// Check the type invariants: finite coordinates, parallel attribute
  /// arrays, unique attribute names. Throws on the first violation.
  void validate() const {
    for (std::size_t i = 0; i < positions.size(); ++i) {
      if (!positions[i].allFinite())
        throw Error("non-finite coordinate at point " + std::to_string(i));
    }
    for (std::size_t i = 0; i < attributes.size(); ++i) {
      const auto& a = attributes[i];
      if (a.values.size() != positions.size())
        throw Error("attribute '" + a.name + "' length mismatch");
      for (std::size_t j = i + 1; j < attributes.size(); ++j)
        if (attributes[j].name == a.name)
          throw Error("duplicate attribute name: " + a.name);
    }
  }
};

// ============================================================================
// TriangleMesh
// ============================================================================

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
  bool empty() const { return triangles.empty(); }

  void validate() const {
    for (std::size_t i = 0; i < triangles.size(); ++i) {
      const auto& t = triangles[i];
      for (int k = 0; k < 3; ++k)
        if (t[k] >= vertices.size())
          throw Error("triangle " + std::to_string(i) + " references vertex " +
                      std::to_string(t[k]) + " beyond vertex count " +
                      std::to_string(vertices.size()));
      if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
        throw Error("degenerate triangle " + std::to_string(i) +
                    " references the same vertex twice");
    }
    for (const auto& v : vertices)
      if (!v.allFinite()) throw Error("non-finite mesh vertex");
  }

  double triangle_area(std::size_t i) const {
    const auto& t = triangles[i];
    const Vec3 e1 = vertices[t[1]] - vertices[t[0]];
    const Vec3 e2 = vertices[t[2]] - vertices[t[0]];
    return 0.5 * e1.cross(e2).norm();
  }

  double surface_area() const {
    double a = 0.0;
    for (std::size_t i = 0; i < triangles.size(); ++i) a += triangle_area(i);
    return a;
  }

  /// Mean of the vertex positions. Used as rotation/scale pivot.
  Vec3 vertex_centroid() const {
    if (vertices.empty()) throw Error("empty point set");
    Vec3 c = Vec3::Zero();
    for (const auto& v : vertices) c += v;
    return c / static_cast<double>(vertices.size());
  }

  double z_extent() const {
    if (vertices.empty()) return 0.0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& v : vertices) {
      lo = std::min(lo, v.z());
      hi = std::max(hi, v.z());
    }
    return hi - lo;
  }
};

// ============================================================================
// SimilarityTransform
// ============================================================================

/// Uniform-scale rigid transform: p -> scale * R * p + translation.
struct SimilarityTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }

  SimilarityTransform inverse() const {
    SimilarityTransform inv;
    inv.scale = 1.0 / scale;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.scale * (inv.rotation * translation));
    return inv;
  }

  void validate() const {
    if (!(scale > 0.0)) throw Error("transform scale must be positive");
    const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
    if (err.cwiseAbs().maxCoeff() > 1e-9)
      throw Error("rotation matrix is not orthonormal");
    if (rotation.determinant() < 0.0)
      throw Error("rotation matrix has negative determinant");
  }

  static SimilarityTransform identity() { return {}; }

  static SimilarityTransform translate(const Vec3& t) {
    SimilarityTransform s;
    s.translation = t;
    return s;
  }

  /// Rotation about the Z axis through `pivot`.
  static SimilarityTransform rotate_z(double angle_rad, const Vec3& pivot = Vec3::Zero()) {
    SimilarityTransform s;
    s.rotation = Eigen::AngleAxisd(angle_rad, Vec3::UnitZ()).toRotationMatrix();
    s.translation = pivot - s.rotation * pivot;
    return s;
  }

  /// Uniform scaling about `center`.
  static SimilarityTransform scale_about(double factor, const Vec3& center) {
    SimilarityTransform s;
    s.scale = factor;
    s.translation = center - factor * center;
    return s;
  }
};

/// Composition: (a * b)(p) == a(b(p)).
inline SimilarityTransform operator*(const SimilarityTransform& a,
                                     const SimilarityTransform& b) {
  SimilarityTransform c;
  c.scale = a.scale * b.scale;
  c.rotation = a.rotation * b.rotation;
  c.translation = a.scale * (a.rotation * b.translation) + a.translation;
  return c;
}

// ============================================================================
// Aabb
// ============================================================================

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  /// Inclusive containment on all faces.
  bool contains(const Vec3& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() &&
           p.y() <= max.y() && p.z() >= min.z() && p.z() <= max.z();
  }

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }

  void validate() const {
    if ((min.array() > max.array()).any()) throw Error("Aabb min exceeds max");
  }

  static Aabb of_points(const std::vector<Vec3>& pts) {
    Aabb b;
    for (const auto& p : pts) b.expand(p);
    return b;
  }
};

// ============================================================================
// Records
// ============================================================================

/// A laboratory-captured object: its point cloud kept at the measured
/// sensor-relative position (never re-centered), plus acquisition metadata.
struct ObjectRecord {
  PointCloud cloud;
  std::string mesh_id;
  std::string object_type;  // e.g. "casual_clothed_pedestrian/standing"
  Vec3 relative_translation = Vec3::Zero();  // sensor center -> object centroid
  double yaw = 0.0;                          // radians about sensor Z, [-pi, pi)
  std::string pose_tag;

  /// Consistency check between metadata and cloud. `tol` is per axis.
  void validate(double tol = 1e-6) const;
};

struct SceneRecord {
  PointCloud cloud;
  double sensor_height = 0.0;  // meters above ground
  std::map<std::string, std::string> meta;

  void validate() const {
    if (!(sensor_height > 0.0)) throw Error("sensor_height must be positive");
  }
};

// ============================================================================
// Operations
// ============================================================================

/// Arithmetic mean of the positions. Throws "empty point set" on an empty
/// cloud.
inline Vec3 centroid(const PointCloud& cloud) {
  if (cloud.empty()) throw Error("empty point set");
  Vec3 c = Vec3::Zero();
  for (const auto& p : cloud.positions) c += p;
  return c / static_cast<double>(cloud.size());
}

/// Apply a similarity transform to every position; attributes are carried
/// unchanged. The input is not mutated.
inline PointCloud transform_cloud(const PointCloud& cloud, const SimilarityTransform& t) {
  PointCloud out;
  out.positions.reserve(cloud.size());
  for (const auto& p : cloud.positions) out.positions.push_back(t.apply(p));
  out.attributes = cloud.attributes;
  return out;
}

inline TriangleMesh transform_mesh(const TriangleMesh& mesh, const SimilarityTransform& t) {
  TriangleMesh out;
  out.vertices.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) out.vertices.push_back(t.apply(v));
  out.triangles = mesh.triangles;
  return out;
}

inline void ObjectRecord::validate(double tol) const {
  cloud.validate();
  if (!cloud.empty()) {
    const Vec3 c = centroid(cloud);
    const Vec3 d = (c - relative_translation).cwiseAbs();
    if (d.maxCoeff() > tol)
      throw Error("metadata inconsistent with cloud: centroid deviates by " +
                  std::to_string(d.maxCoeff()) + " m");
  }
  if (yaw < -std::numbers::pi || yaw >= std::numbers::pi)
    throw Error("yaw outside [-pi, pi)");
}

}  // namespace recomb
