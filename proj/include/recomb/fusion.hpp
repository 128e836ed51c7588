// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// Recombination: concatenate the occlusion-filtered scene with the object
// cloud, unify attribute schemas, tag provenance and emit oriented-box
// labels. Placement along the discrete orbital path preserves the measured
// radial distance exactly (a pure Z rotation).

#pragma once

#include <recomb/core.hpp>
#include <recomb/occlusion.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace recomb::fusion {

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Zero();
  double yaw = 0.0;  // radians about sensor Z
  std::string object_type;
  std::string object_id;

  void validate() const {
    if ((half_extents.array() <= 0.0).any()) throw Error("box half extents must be positive");
  }

  /// Point-in-box test with a slack margin, in the yaw-rotated frame.
  bool contains(const Vec3& p, double margin = 0.0) const {
    const Eigen::AngleAxisd unrot(-yaw, Vec3::UnitZ());
    const Vec3 local = unrot * (p - center);
    return (local.cwiseAbs().array() <= half_extents.array() + margin).all();
  }
};

struct RecombinedScene {
  PointCloud cloud;  // scene points first, object points appended
  std::vector<OrientedBox> labels;
  // -1 marks a scene point; values >= 0 index into object_ids
  std::vector<int> provenance;
  std::vector<std::string> object_ids;
  // attributes one side lacked, filled with the 0 sentinel; "<side>:<name>"
  std::vector<std::string> filled_attributes;

  std::size_t scene_point_count() const {
    std::size_t n = 0;
    for (int p : provenance)
      if (p < 0) ++n;
    return n;
  }
};

/// Yaw-aligned minimal bounding box of the aligned mesh: yaw comes from the
/// object metadata, extents from the mesh bounds in the yaw-rotated frame.
inline OrientedBox make_label(const ObjectRecord& object, const TriangleMesh& aligned_mesh) {
  OrientedBox box;
  box.yaw = object.yaw;
  box.object_type = object.object_type;
  box.object_id = object.mesh_id;
  const Eigen::AngleAxisd unrot(-object.yaw, Vec3::UnitZ());
  Aabb local;
  for (const auto& v : aligned_mesh.vertices) local.expand(unrot * v);
  if (aligned_mesh.vertices.empty()) {
    // metadata-only fallback: no geometry to measure, use a nominal box at
    // the recorded translation so the label list is still emitted
    local.expand(unrot * object.relative_translation - Vec3::Constant(0.05));
    local.expand(unrot * object.relative_translation + Vec3::Constant(0.05));
  }
  box.half_extents = (0.5 * local.extent()).cwiseMax(1e-6);
  box.center = Eigen::AngleAxisd(object.yaw, Vec3::UnitZ()) * local.center();
  return box;
}

namespace detail {

struct UnifiedSchema {
  std::vector<Attribute> attrs;  // scene attributes first, then object-only ones
  std::vector<std::string> filled;
};

inline UnifiedSchema unify_schemas(const PointCloud& scene, const PointCloud& object) {
  UnifiedSchema u;
  for (const auto& a : scene.attributes) {
    if (const auto* b = object.find_attribute(a.name); b && b->kind != a.kind)
      throw Error("attribute type conflict on '" + a.name + "'");
    u.attrs.push_back({a.name, a.kind, {}});
    if (!object.find_attribute(a.name)) u.filled.push_back("object:" + a.name);
  }
  for (const auto& b : object.attributes) {
    if (scene.find_attribute(b.name)) continue;
    u.attrs.push_back({b.name, b.kind, {}});
    u.filled.push_back("scene:" + b.name);
  }
  return u;
}

inline void append_with_schema(PointCloud& out, const std::vector<Attribute>& schema,
                               const PointCloud& src) {
  for (std::size_t i = 0; i < src.size(); ++i) {
    out.positions.push_back(src.positions[i]);
    for (std::size_t k = 0; k < schema.size(); ++k) {
      const auto* a = src.find_attribute(schema[k].name);
      out.attributes[k].values.push_back(a ? a->values[i] : 0.0);
    }
  }
}

}  // namespace detail

/// Filter the scene by the occlusion result, append the object cloud and
/// label it. `aligned_mesh`, when given, provides the label geometry;
/// otherwise the object cloud's own bounds are used.
inline RecombinedScene recombine(const SceneRecord& scene, const ObjectRecord& object,
                                 const occlusion::OcclusionResult& occ,
                                 const TriangleMesh* aligned_mesh = nullptr) {
  const PointCloud filtered = occlusion::remove_points(scene.cloud, occ.occluded_indices);

  auto schema = detail::unify_schemas(filtered, object.cloud);
  RecombinedScene out;
  out.cloud.attributes = std::move(schema.attrs);
  out.filled_attributes = std::move(schema.filled);
  detail::append_with_schema(out.cloud, out.cloud.attributes, filtered);
  detail::append_with_schema(out.cloud, out.cloud.attributes, object.cloud);

  out.object_ids.push_back(object.mesh_id);
  out.provenance.assign(filtered.size(), -1);
  out.provenance.resize(filtered.size() + object.cloud.size(), 0);

  if (aligned_mesh) {
    out.labels.push_back(make_label(object, *aligned_mesh));
  } else {
    TriangleMesh cloud_bounds;  // label from the object points themselves
    cloud_bounds.vertices = object.cloud.positions;
    out.labels.push_back(make_label(object, cloud_bounds));
  }
  return out;
}

// ----------------------------------------------------------------------------
// Sequential multi-object insertion
// ----------------------------------------------------------------------------

struct PlacedObject {
  ObjectRecord record;  // already placed at its target azimuth
  TriangleMesh mesh;    // aligned + placed
};

struct InsertSequenceResult {
  RecombinedScene scene;
  std::vector<std::size_t> occluded_per_step;
  std::size_t total_occluded = 0;
};

/// Insert objects one after another. Each insertion casts rays for the full
/// current cloud — original scene remainder plus previously inserted object
/// points — so later objects shadow earlier ones exactly like scene geometry.
inline InsertSequenceResult insert_sequence(const SceneRecord& scene,
                                            const std::vector<PlacedObject>& objects,
                                            const occlusion::OcclusionOptions& opt = {}) {
  InsertSequenceResult result;
  result.scene.cloud = scene.cloud;
  result.scene.provenance.assign(scene.cloud.size(), -1);

  for (const auto& obj : objects) {
    const auto occ = occlusion::compute_occlusion(result.scene.cloud, obj.mesh, opt);
    result.occluded_per_step.push_back(occ.occluded_indices.size());
    result.total_occluded += occ.occluded_indices.size();

    // filter provenance in lockstep with the cloud
    std::vector<bool> drop(result.scene.provenance.size(), false);
    for (std::size_t idx : occ.occluded_indices) drop[idx] = true;
    std::vector<int> kept;
    kept.reserve(result.scene.provenance.size());
    for (std::size_t i = 0; i < result.scene.provenance.size(); ++i)
      if (!drop[i]) kept.push_back(result.scene.provenance[i]);

    SceneRecord current;
    current.cloud = std::move(result.scene.cloud);
    current.sensor_height = scene.sensor_height;
    RecombinedScene step = recombine(current, obj.record, occ, &obj.mesh);

    const int obj_index = static_cast<int>(result.scene.object_ids.size());
    result.scene.object_ids.push_back(obj.record.mesh_id);
    kept.resize(step.cloud.size(), obj_index);
    result.scene.provenance = std::move(kept);
    result.scene.cloud = std::move(step.cloud);
    result.scene.labels.push_back(step.labels.front());
    for (auto& f : step.filled_attributes)
      result.scene.filled_attributes.push_back(std::move(f));
  }
  return result;
}

// ----------------------------------------------------------------------------
// Placement
// ----------------------------------------------------------------------------

/// Rotate the object record and its mesh rigidly about the sensor Z axis so
/// the object sits at `azimuth`. The radial distance and the object-relative
/// orientation are preserved exactly. `azimuth` must lie on the discrete
/// grid anchored at zero with step `grid_step_rad`.
inline std::pair<ObjectRecord, TriangleMesh> place_at_azimuth(
    const ObjectRecord& object, const TriangleMesh& mesh, double azimuth,
    double grid_step_rad = deg_to_rad(1.0)) {
  if (!(grid_step_rad > 0.0)) throw Error("azimuth grid step must be positive");
  const double steps = azimuth / grid_step_rad;
  if (std::abs(steps - std::round(steps)) > 1e-9)
    throw Error("azimuth is off the placement grid (step " +
                std::to_string(rad_to_deg(grid_step_rad)) + " deg)");

  const double original =
      std::atan2(object.relative_translation.y(), object.relative_translation.x());
  const double delta = azimuth - original;
  const auto rot = SimilarityTransform::rotate_z(delta);

  ObjectRecord placed = object;
  placed.cloud = transform_cloud(object.cloud, rot);
  placed.relative_translation = rot.apply(object.relative_translation);
  placed.yaw = wrap_angle(object.yaw + delta);
  return {std::move(placed), transform_mesh(mesh, rot)};
}

}  // namespace recomb::fusion
