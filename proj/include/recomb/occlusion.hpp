// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// Shadow computation: which scene points does a registered mesh hide from
// the sensor, and removal of points by index with full attribute carry-over.
//
// For every scene point p a ray (origin at the sensor, direction p) is cast
// against the mesh. The physical predicate marks p occluded when the nearest
// hit lies strictly between sensor and point, t_hit < 1 - epsilon. The
// literal predicate (any hit at all, t_hit < inf) also removes points in
// front of the mesh; it exists behind a flag for compatibility comparisons.

#pragma once

#include <recomb/core.hpp>
#include <recomb/spatial.hpp>

#include <vector>

namespace recomb::occlusion {

struct OcclusionOptions {
  double epsilon = 1e-4;  // margin below t=1; points on the surface are kept
  bool literal_predicate = false;
};

struct OcclusionResult {
  std::vector<std::size_t> occluded_indices;  // strictly increasing
  PointCloud occluded_points;                 // positions only
  std::vector<std::size_t> skipped_indices;   // points at the exact origin
};

namespace detail {

inline bool occluded_by_t(double t_hit, const OcclusionOptions& opt) {
  if (opt.literal_predicate) return t_hit < spatial::kNoHit;
  return t_hit < 1.0 - opt.epsilon;
}

}  // namespace detail

/// Occlusion via the spatial index. `mesh` must already be registered into
/// the sensor-centered frame of `scene`.
inline OcclusionResult compute_occlusion(const PointCloud& scene, const TriangleMesh& mesh,
                                         const OcclusionOptions& opt = {}) {
  if (scene.empty()) throw Error("empty point set");
  const spatial::Bvh bvh(mesh);
  OcclusionResult result;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Vec3& p = scene.positions[i];
    if (p.isZero(0.0)) {
      result.skipped_indices.push_back(i);
      continue;
    }
    const double t = bvh.cast_ray({Vec3::Zero(), p});
    if (detail::occluded_by_t(t, opt)) {
      result.occluded_indices.push_back(i);
      result.occluded_points.positions.push_back(p);
    }
  }
  return result;
}

/// Exhaustive all-pairs ray/triangle oracle with the identical predicate.
inline std::vector<std::size_t> brute_force_occlusion(const PointCloud& scene,
                                                      const TriangleMesh& mesh,
                                                      const OcclusionOptions& opt = {}) {
  std::vector<std::size_t> occluded;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Vec3& p = scene.positions[i];
    if (p.isZero(0.0)) continue;
    const double t = spatial::brute_force_ray_hit(mesh, {Vec3::Zero(), p});
    if (detail::occluded_by_t(t, opt)) occluded.push_back(i);
  }
  return occluded;
}

/// Remove the listed points; survivors keep their order and their full
/// attribute tuples bit for bit. Indices may arrive unsorted and duplicated.
inline PointCloud remove_points(const PointCloud& cloud,
                                const std::vector<std::size_t>& indices) {
  std::vector<bool> drop(cloud.size(), false);
  for (std::size_t idx : indices) {
    if (idx >= cloud.size())
      throw Error("remove_points index " + std::to_string(idx) +
                  " out of range for cloud of size " + std::to_string(cloud.size()));
    drop[idx] = true;
  }
  PointCloud out;
  for (const auto& a : cloud.attributes) out.attributes.push_back({a.name, a.kind, {}});
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (drop[i]) continue;
    out.positions.push_back(cloud.positions[i]);
    for (std::size_t k = 0; k < cloud.attributes.size(); ++k)
      out.attributes[k].values.push_back(cloud.attributes[k].values[i]);
  }
  return out;
}

/// Fallback for externally supplied occlusion sets: match by exact bitwise
/// coordinate equality instead of index carry-over.
inline std::vector<std::size_t> indices_matching_positions(const PointCloud& cloud,
                                                           const PointCloud& positions) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    for (const auto& q : positions.positions) {
      if (p.x() == q.x() && p.y() == q.y() && p.z() == q.z()) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

}  // namespace recomb::occlusion
