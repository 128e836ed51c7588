// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// Placement plausibility: eigenvalue surface variation over adaptive-radius
// neighborhoods, aggregated into a ground-plane grid of valid insertion
// cells, plus the geometric compatibility checks run before an insertion.

#pragma once

#include <recomb/core.hpp>
#include <recomb/fusion.hpp>
#include <recomb/spatial.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace recomb::insertion_map {

// ----------------------------------------------------------------------------
// Surface variation
// ----------------------------------------------------------------------------

/// lambda3 / (lambda1 + lambda2 + lambda3) of the neighborhood covariance
/// (1/N normalization; the ratio cancels the choice anyway). 0 for planes
/// and lines, up to 1/3 for isotropic scatter. Undefined (missing, not 0)
/// below 3 points or at zero total variance.
inline std::optional<double> surface_variation(const std::vector<Vec3>& neighborhood) {
  const std::size_t n = neighborhood.size();
  if (n < 3) return std::nullopt;
  Vec3 mean = Vec3::Zero();
  for (const auto& p : neighborhood) mean += p;
  mean /= static_cast<double>(n);
  Mat3 cov = Mat3::Zero();
  for (const auto& p : neighborhood) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 lambda = eig.eigenvalues();  // ascending
  const double sum = lambda.sum();
  if (!(sum > 0.0)) return std::nullopt;
  return std::max(0.0, lambda[0]) / sum;
}

struct SurfaceVariationParams {
  double r_min = 0.1;  // meters; doubled until k_min neighbors or r_max
  double r_max = 1.0;
  std::size_t k_min = 10;
};

struct SurfaceVariationField {
  std::vector<std::optional<double>> sv;  // one per point, empty when undefined
  std::vector<double> radius;             // radius actually used (r_max if missing)
};

/// Per-point surface variation with the adaptive radius rule: grow from
/// r_min by doubling until the neighborhood reaches k_min points or r_max.
inline SurfaceVariationField adaptive_radius_sv(const PointCloud& cloud,
                                                const SurfaceVariationParams& params = {}) {
  if (cloud.empty()) throw Error("empty point set");
  const spatial::KdTree tree(cloud.positions);
  SurfaceVariationField field;
  field.sv.resize(cloud.size());
  field.radius.resize(cloud.size(), params.r_max);

  std::vector<Vec3> hood;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    double r = params.r_min;
    std::vector<std::size_t> idx;
    while (true) {
      idx = tree.radius_search(cloud.positions[i], r);
      if (idx.size() >= params.k_min || r >= params.r_max) break;
      r = std::min(2.0 * r, params.r_max);
    }
    field.radius[i] = r;
    if (idx.size() < params.k_min) continue;  // stays missing
    hood.clear();
    for (std::size_t j : idx) hood.push_back(cloud.positions[j]);
    field.sv[i] = surface_variation(hood);
  }
  return field;
}

// ----------------------------------------------------------------------------
// Insertion map
// ----------------------------------------------------------------------------

struct InsertionMapConfig {
  double cell_size = 0.25;       // meters
  double sv_threshold = 0.10;    // cells flatter than this qualify
  std::size_t min_count = 20;    // minimum points per valid cell
  double height_tolerance = 0.05;  // max vertical spread of a valid cell
  SurfaceVariationParams sv;
};

struct InsertionCell {
  long ix = 0, iy = 0;
  double mean_sv = 0.0;
  double ground_z = 0.0;  // 5th percentile of cell point heights
  std::size_t count = 0;
  bool valid = false;
};

struct InsertionMap {
  InsertionMapConfig config;
  double origin_x = 0.0, origin_y = 0.0;
  std::vector<InsertionCell> cells;  // sorted by (ix, iy)

  const InsertionCell* cell_at(double x, double y) const {
    const long ix = static_cast<long>(std::floor((x - origin_x) / config.cell_size));
    const long iy = static_cast<long>(std::floor((y - origin_y) / config.cell_size));
    const auto it = std::lower_bound(
        cells.begin(), cells.end(), std::make_pair(ix, iy), [](const InsertionCell& c, const std::pair<long, long>& k) {
          return std::make_pair(c.ix, c.iy) < k;
        });
    if (it == cells.end() || it->ix != ix || it->iy != iy) return nullptr;
    return &*it;
  }
};

/// Aggregate the surface-variation field over a ground-plane grid. A cell is
/// valid when it has enough points, its mean surface variation stays at or
/// below the threshold and its vertical spread is within tolerance.
inline InsertionMap build_insertion_map(const SceneRecord& scene,
                                        const InsertionMapConfig& config = {}) {
  if (scene.cloud.empty()) throw Error("empty point set");
  const auto field = adaptive_radius_sv(scene.cloud, config.sv);

  InsertionMap map;
  map.config = config;
  const Aabb bounds = Aabb::of_points(scene.cloud.positions);
  map.origin_x = bounds.min.x();
  map.origin_y = bounds.min.y();

  struct CellAccum {
    double sv_sum = 0.0;
    std::size_t sv_count = 0;
    std::vector<double> heights;
  };
  std::map<std::pair<long, long>, CellAccum> accum;
  for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
    const Vec3& p = scene.cloud.positions[i];
    const long ix = static_cast<long>(std::floor((p.x() - map.origin_x) / config.cell_size));
    const long iy = static_cast<long>(std::floor((p.y() - map.origin_y) / config.cell_size));
    auto& c = accum[{ix, iy}];
    c.heights.push_back(p.z());
    if (field.sv[i]) {
      c.sv_sum += *field.sv[i];
      ++c.sv_count;
    }
  }

  for (auto& [key, c] : accum) {
    InsertionCell cell;
    cell.ix = key.first;
    cell.iy = key.second;
    cell.count = c.heights.size();
    std::sort(c.heights.begin(), c.heights.end());
    cell.ground_z = c.heights[static_cast<std::size_t>(
        0.05 * static_cast<double>(c.heights.size() - 1))];
    cell.mean_sv = c.sv_count > 0 ? c.sv_sum / static_cast<double>(c.sv_count) : 1.0;
    const double spread = c.heights.back() - c.heights.front();
    cell.valid = cell.count >= config.min_count && c.sv_count > 0 &&
                 cell.mean_sv <= config.sv_threshold && spread <= config.height_tolerance;
    map.cells.push_back(cell);
  }
  return map;
}

/// CSV raster: one row per populated cell.
inline std::string to_csv(const InsertionMap& map) {
  char head[256];
  std::snprintf(head, sizeof(head), "# origin_x=%.17g origin_y=%.17g cell_size=%.17g\n",
                map.origin_x, map.origin_y, map.config.cell_size);
  std::string out = head;
  out += "ix,iy,mean_sv,ground_z,count,valid\n";
  char buf[256];
  for (const auto& c : map.cells) {
    std::snprintf(buf, sizeof(buf), "%ld,%ld,%.17g,%.17g,%zu,%d\n", c.ix, c.iy, c.mean_sv,
                  c.ground_z, c.count, c.valid ? 1 : 0);
    out += buf;
  }
  return out;
}

// ----------------------------------------------------------------------------
// Placement validation
// ----------------------------------------------------------------------------

enum class Violation {
  FootprintOnInvalidCell,
  RangeMutation,
  Collision,
  GroundHeightMismatch,
};

inline const char* violation_name(Violation v) {
  switch (v) {
    case Violation::FootprintOnInvalidCell: return "footprint-on-invalid-cell";
    case Violation::RangeMutation: return "range-mutation";
    case Violation::Collision: return "collision";
    case Violation::GroundHeightMismatch: return "ground-height-mismatch";
  }
  return "unknown";
}

struct PlacementVerdict {
  std::vector<Violation> violations;
  std::vector<std::string> details;
  bool ok() const { return violations.empty(); }
};

struct PlacementRequest {
  double azimuth_rad = 0.0;
  // a requested radial distance different from the measured one is refused
  std::optional<double> requested_range;
};

struct PlacementRules {
  double collision_tolerance = 0.05;  // erosion of the mesh bounds, meters
  std::size_t max_collision_points = 0;
  double ground_tolerance = 0.05;  // allowed |mesh base - cell ground| gap
};

/// Geometric compatibility of one placement against the scene's insertion
/// map. Violations are data, not errors.
inline PlacementVerdict validate_placement(const ObjectRecord& object,
                                           const TriangleMesh& mesh,
                                           const InsertionMap& map,
                                           const SceneRecord& scene,
                                           const PlacementRequest& request,
                                           const PlacementRules& rules = {},
                                           double azimuth_grid_rad = deg_to_rad(1.0)) {
  PlacementVerdict verdict;
  auto flag = [&verdict](Violation v, std::string detail) {
    verdict.violations.push_back(v);
    verdict.details.push_back(std::move(detail));
  };

  const double measured_range = object.relative_translation.norm();
  if (request.requested_range &&
      std::abs(*request.requested_range - measured_range) > 1e-9) {
    flag(Violation::RangeMutation,
         "requested range " + std::to_string(*request.requested_range) +
             " differs from measured " + std::to_string(measured_range));
  }

  const auto [placed, placed_mesh] =
      fusion::place_at_azimuth(object, mesh, request.azimuth_rad, azimuth_grid_rad);
  const Aabb bounds = Aabb::of_points(placed_mesh.vertices);

  // footprint cells must all be valid
  bool invalid_cell = false;
  for (double x = bounds.min.x(); x <= bounds.max.x() + 1e-12; x += map.config.cell_size) {
    for (double y = bounds.min.y(); y <= bounds.max.y() + 1e-12;
         y += map.config.cell_size) {
      const auto* cell = map.cell_at(std::min(x, bounds.max.x()), std::min(y, bounds.max.y()));
      if (!cell || !cell->valid) invalid_cell = true;
    }
  }
  if (invalid_cell)
    flag(Violation::FootprintOnInvalidCell, "footprint covers an invalid or empty cell");

  // scene points deep inside the placed mesh bounds mean a collision
  Aabb eroded = bounds;
  eroded.min += Vec3::Constant(rules.collision_tolerance);
  eroded.max -= Vec3::Constant(rules.collision_tolerance);
  std::size_t inside = 0;
  if ((eroded.min.array() <= eroded.max.array()).all()) {
    for (const auto& p : scene.cloud.positions)
      if (eroded.contains(p)) ++inside;
  }
  if (inside > rules.max_collision_points)
    flag(Violation::Collision,
         std::to_string(inside) + " scene points inside the placed mesh bounds");

  // the object's base must sit on the scene ground within tolerance
  const auto* center_cell =
      map.cell_at(placed.relative_translation.x(), placed.relative_translation.y());
  if (center_cell) {
    const double gap = std::abs(bounds.min.z() - center_cell->ground_z);
    if (gap > rules.ground_tolerance)
      flag(Violation::GroundHeightMismatch,
           "mesh base deviates " + std::to_string(gap) + " m from cell ground height");
  }

  return verdict;
}

}  // namespace recomb::insertion_map
