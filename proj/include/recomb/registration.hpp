// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// Mesh-to-point-cloud alignment: rotational sampling about the Z axis, each
// attempt refined by staged point-to-point ICP with progressively stricter
// correspondence thresholds, the winner selected by Chamfer distance. The
// Chamfer used for selection is the metrics module's, not a private variant.

#pragma once

#include <recomb/core.hpp>
#include <recomb/metrics.hpp>
#include <recomb/spatial.hpp>

#include <Eigen/SVD>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace recomb::registration {

struct RegistrationConfig {
  int divisor = 8;                  // rotation samples about Z
  int sample_count = 30000;         // mesh surface samples per attempt
  std::vector<double> stage_thresholds = {0.10, 0.05};  // meters, strictly decreasing
  int max_iterations_per_stage = 50;
  double convergence_eps = 1e-6;    // relative RMSE change
  std::uint64_t seed = 0;

  void validate() const {
    if (divisor < 1) throw Error("divisor must be >= 1");
    if (sample_count < 1) throw Error("sample_count must be >= 1");
    if (stage_thresholds.empty()) throw Error("at least one stage threshold required");
    for (std::size_t i = 0; i < stage_thresholds.size(); ++i) {
      if (!(stage_thresholds[i] > 0.0)) throw Error("stage thresholds must be positive");
      if (i > 0 && !(stage_thresholds[i] < stage_thresholds[i - 1]))
        throw Error("stage thresholds must be strictly decreasing");
    }
    if (max_iterations_per_stage < 1) throw Error("max_iterations_per_stage must be >= 1");
    if (!(convergence_eps > 0.0)) throw Error("convergence_eps must be positive");
  }
};

struct RegistrationResult {
  TriangleMesh aligned_mesh;
  SimilarityTransform transform;  // maps the input mesh onto aligned_mesh
  double best_rotation_deg = 0.0;
  double chamfer = 0.0;  // m^2, between sampled aligned mesh and object cloud
  bool symmetry_risk = false;  // best and runner-up chamfer within 10%
  std::vector<double> rotation_chamfers;  // one per attempt, +inf if diverged
};

struct IcpDiagnostics {
  struct Stage {
    double threshold = 0.0;
    std::vector<double> rmse;  // one entry per iteration, post-solve
  };
  std::vector<Stage> stages;
};

// ----------------------------------------------------------------------------
// Surface sampling
// ----------------------------------------------------------------------------

/// Draw `n` points area-uniformly from the triangle surface. Deterministic
/// for a given seed: the same triangle choices and barycentric coordinates
/// are produced for any uniformly transformed copy of the mesh.
inline PointCloud sample_mesh_surface(const TriangleMesh& mesh, int n,
                                      std::uint64_t seed = 0) {
  if (mesh.triangles.empty()) throw Error("cannot sample an empty mesh");
  if (n < 1) throw Error("sample count must be >= 1");
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    total += mesh.triangle_area(i);
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw Error("cannot sample a zero-area mesh");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  PointCloud out;
  out.positions.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double pick = u01(rng) * total;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), pick);
    const std::size_t ti =
        std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
    const auto& t = mesh.triangles[ti];
    // sqrt trick for a uniform barycentric draw
    const double r1 = std::sqrt(u01(rng));
    const double r2 = u01(rng);
    const double a = 1.0 - r1, b = r1 * (1.0 - r2), c = r1 * r2;
    out.positions.push_back(a * mesh.vertices[t[0]] + b * mesh.vertices[t[1]] +
                            c * mesh.vertices[t[2]]);
  }
  return out;
}

/// Uniformly scale the mesh about its vertex centroid so its Z extent equals
/// the cloud's. Returns the scaled mesh and the factor applied.
inline std::pair<TriangleMesh, double> scale_mesh_to_cloud_height(const TriangleMesh& mesh,
                                                                  const PointCloud& cloud) {
  if (mesh.vertices.empty() || cloud.empty()) throw Error("empty point set");
  const double mesh_ext = mesh.z_extent();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : cloud.positions) {
    lo = std::min(lo, p.z());
    hi = std::max(hi, p.z());
  }
  const double cloud_ext = hi - lo;
  if (!(mesh_ext > 0.0) || !(cloud_ext > 0.0))
    throw Error("zero Z extent, cannot scale to height");
  const double s = cloud_ext / mesh_ext;
  const auto t = SimilarityTransform::scale_about(s, mesh.vertex_centroid());
  return {transform_mesh(mesh, t), s};
}

// ----------------------------------------------------------------------------
// ICP
// ----------------------------------------------------------------------------

namespace detail {

/// Closed-form rigid least-squares fit (Kabsch) for paired points.
inline SimilarityTransform solve_rigid(const std::vector<Vec3>& src,
                                       const std::vector<Vec3>& dst) {
  Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
  const double n = static_cast<double>(src.size());
  for (const auto& p : src) cs += p;
  for (const auto& p : dst) cd += p;
  cs /= n;
  cd /= n;
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i)
    h += (src[i] - cs) * (dst[i] - cd).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  SimilarityTransform t;
  t.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  t.translation = cd - t.rotation * cs;
  return t;
}

}  // namespace detail

/// Staged rigid point-to-point ICP. Each stage starts from the previous
/// stage's result and rejects correspondences farther than its threshold.
/// Scale is fixed at 1 inside ICP. Throws "registration diverged" when a
/// stage finds no valid correspondence.
inline SimilarityTransform icp(const PointCloud& source, const PointCloud& target,
                               const SimilarityTransform& init,
                               const std::vector<double>& thresholds,
                               int max_iterations_per_stage = 50,
                               double convergence_eps = 1e-6,
                               IcpDiagnostics* diagnostics = nullptr) {
  if (source.size() < 3 || target.size() < 3)
    throw Error("icp requires at least 3 points on both sides");
  const spatial::KdTree target_tree(target.positions);
  SimilarityTransform t = init;

  std::vector<Vec3> moved(source.size());
  std::vector<Vec3> src_inliers, dst_inliers;
  for (double threshold : thresholds) {
    IcpDiagnostics::Stage stage;
    stage.threshold = threshold;
    double prev_rmse = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < max_iterations_per_stage; ++iter) {
      for (std::size_t i = 0; i < source.size(); ++i)
        moved[i] = t.apply(source.positions[i]);

      src_inliers.clear();
      dst_inliers.clear();
      double sq_sum = 0.0;
      const double thr_sq = threshold * threshold;
      for (std::size_t i = 0; i < moved.size(); ++i) {
        const auto [qi, dist] = target_tree.nearest(moved[i]);
        if (dist * dist > thr_sq) continue;
        src_inliers.push_back(moved[i]);
        dst_inliers.push_back(target.positions[qi]);
        sq_sum += dist * dist;
      }
      if (src_inliers.empty()) throw Error("registration diverged");
      const double pre_rmse = std::sqrt(sq_sum / static_cast<double>(src_inliers.size()));

      const SimilarityTransform delta = detail::solve_rigid(src_inliers, dst_inliers);
      t = delta * t;

      double post_sq = 0.0;
      for (std::size_t i = 0; i < src_inliers.size(); ++i)
        post_sq += (delta.apply(src_inliers[i]) - dst_inliers[i]).squaredNorm();
      const double post_rmse =
          std::sqrt(post_sq / static_cast<double>(src_inliers.size()));
      // least-squares optimality: the solve can never worsen its own inliers
      if (post_rmse > pre_rmse + 1e-12)
        throw Error("icp internal error: rigid solve increased inlier RMSE");
      stage.rmse.push_back(post_rmse);

      const double change = std::abs(prev_rmse - post_rmse);
      prev_rmse = post_rmse;
      if (post_rmse == 0.0 || change <= convergence_eps * std::max(post_rmse, 1e-300))
        break;
    }
    if (diagnostics) diagnostics->stages.push_back(std::move(stage));
  }
  return t;
}

// ----------------------------------------------------------------------------
// Full registration
// ----------------------------------------------------------------------------

/// Align an object-type mesh to an empirically captured object cloud. Height
/// scaling is applied once, then each of the `divisor` Z rotations about the
/// mesh centroid is sampled, coarsely initialized from centroids, refined by
/// staged ICP and scored by Chamfer distance; the best attempt wins, ties
/// broken toward the smaller angle. All attempts are evaluated.
inline RegistrationResult register_mesh_to_cloud(const TriangleMesh& mesh,
                                                 const PointCloud& object_cloud,
                                                 const RegistrationConfig& config = {}) {
  config.validate();
  if (mesh.triangles.empty()) throw Error("cannot register an empty mesh");
  if (object_cloud.size() < 3) throw Error("object cloud must have at least 3 points");

  const auto [scaled_mesh, scale] = scale_mesh_to_cloud_height(mesh, object_cloud);
  const Vec3 pivot = scaled_mesh.vertex_centroid();
  const Vec3 cloud_centroid = centroid(object_cloud);

  // One sampling reused across attempts: rotating the samples is exactly
  // sampling the rotated copy, since triangle choice and barycentrics are
  // invariant under similarity transforms.
  const PointCloud base_samples =
      sample_mesh_surface(scaled_mesh, config.sample_count, config.seed);

  RegistrationResult result;
  result.rotation_chamfers.assign(static_cast<std::size_t>(config.divisor),
                                  std::numeric_limits<double>::infinity());
  double best = std::numeric_limits<double>::infinity();
  double second_best = std::numeric_limits<double>::infinity();
  int best_k = -1;
  SimilarityTransform best_total;
  std::vector<std::string> failures;

  for (int k = 0; k < config.divisor; ++k) {
    const double theta = deg_to_rad(360.0 * k / config.divisor);
    const auto rot = SimilarityTransform::rotate_z(theta, pivot);
    const PointCloud samples = transform_cloud(base_samples, rot);

    SimilarityTransform init;
    init.translation = cloud_centroid - centroid(samples);
    try {
      const SimilarityTransform t =
          icp(samples, object_cloud, init, config.stage_thresholds,
              config.max_iterations_per_stage, config.convergence_eps);
      const double d = metrics::chamfer(transform_cloud(samples, t), object_cloud);
      result.rotation_chamfers[static_cast<std::size_t>(k)] = d;
      if (d < best) {
        second_best = best;
        best = d;
        best_k = k;
        best_total = t * rot * SimilarityTransform::scale_about(scale, mesh.vertex_centroid());
      } else if (d < second_best) {
        second_best = d;
      }
    } catch (const Error& e) {
      failures.push_back("theta=" + std::to_string(360.0 * k / config.divisor) +
                         " deg: " + e.what());
    }
  }

  if (best_k < 0) {
    std::string msg = "registration diverged for all rotations:";
    for (const auto& f : failures) msg += "\n  " + f;
    throw Error(msg);
  }

  result.chamfer = best;
  result.best_rotation_deg = 360.0 * best_k / config.divisor;
  result.transform = best_total;
  result.aligned_mesh = transform_mesh(mesh, best_total);
  result.symmetry_risk =
      std::isfinite(second_best) &&
      (best == 0.0 ? second_best <= 1e-12 : second_best < 1.1 * best);
  return result;
}

}  // namespace recomb::registration
