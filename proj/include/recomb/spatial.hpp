// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// Acceleration structures: an exact k-d tree over 3D point sets and a BVH
// for ray/mesh intersection. Both are immutable after build and safe for
// concurrent queries. Exactness is the contract: results equal brute force.

#pragma once

#include <recomb/core.hpp>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace recomb::spatial {

inline constexpr double kNoHit = std::numeric_limits<double>::infinity();

// ============================================================================
// KdTree — exact nearest-neighbor index over a fixed 3D point set
// ============================================================================

class KdTree {
 public:
  explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) throw Error("cannot build neighbor index over empty point set");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * points_.size());
    root_ = build(0, points_.size());
  }

  explicit KdTree(const PointCloud& cloud) : KdTree(cloud.positions) {}

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// Index and Euclidean distance of the nearest point to `q`.
  std::pair<std::size_t, double> nearest(const Vec3& q) const {
    std::size_t best = npos;
    double best_sq = std::numeric_limits<double>::infinity();
    search_nearest(root_, q, best, best_sq);
    return {best, std::sqrt(best_sq)};
  }

  double nearest_distance_sq(const Vec3& q) const {
    std::size_t best = npos;
    double best_sq = std::numeric_limits<double>::infinity();
    search_nearest(root_, q, best, best_sq);
    return best_sq;
  }

  /// Indices of the k nearest points, closest first. Ties resolve to the
  /// smaller point index so results are deterministic.
  std::vector<std::pair<std::size_t, double>> k_nearest(const Vec3& q, std::size_t k) const {
    std::vector<std::pair<double, std::size_t>> heap;  // (dist_sq, index) max-heap
    search_knn(root_, q, k, heap);
    std::sort(heap.begin(), heap.end());
    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(heap.size());
    for (const auto& [d2, i] : heap) out.emplace_back(i, std::sqrt(d2));
    return out;
  }

  /// All indices within `radius` (inclusive) of `q`, sorted ascending.
  std::vector<std::size_t> radius_search(const Vec3& q, double radius) const {
    std::vector<std::size_t> out;
    search_radius(root_, q, radius * radius, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t count_within(const Vec3& q, double radius) const {
    std::size_t n = 0;
    count_radius(root_, q, radius * radius, n);
    return n;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  struct Node {
    double split = 0.0;
    std::int32_t axis = -1;  // -1 marks a leaf
    std::uint32_t begin = 0, end = 0;
    std::int32_t left = -1, right = -1;
  };

  static constexpr std::size_t kLeafSize = 16;

  std::int32_t build(std::size_t begin, std::size_t end) {
    Node node;
    if (end - begin <= kLeafSize) {
      node.begin = static_cast<std::uint32_t>(begin);
      node.end = static_cast<std::uint32_t>(end);
      // keep leaves index-sorted for deterministic tie behavior
      std::sort(order_.begin() + begin, order_.begin() + end);
      nodes_.push_back(node);
      return static_cast<std::int32_t>(nodes_.size() - 1);
    }
    Aabb bounds;
    for (std::size_t i = begin; i < end; ++i) bounds.expand(points_[order_[i]]);
    const Vec3 ext = bounds.extent();
    int axis = 0;
    if (ext.y() > ext.x()) axis = 1;
    if (ext.z() > ext[axis]) axis = 2;
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       const double va = points_[a][axis], vb = points_[b][axis];
                       return va < vb || (va == vb && a < b);
                     });
    node.axis = axis;
    node.split = points_[order_[mid]][axis];
    nodes_.push_back(node);
    const auto self = static_cast<std::int32_t>(nodes_.size() - 1);
    const auto l = build(begin, mid);
    const auto r = build(mid, end);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  void search_nearest(std::int32_t ni, const Vec3& q, std::size_t& best,
                      double& best_sq) const {
    const Node& n = nodes_[ni];
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::size_t pi = order_[i];
        const double d2 = (points_[pi] - q).squaredNorm();
        if (d2 < best_sq || (d2 == best_sq && pi < best)) {
          best_sq = d2;
          best = pi;
        }
      }
      return;
    }
    const double delta = q[n.axis] - n.split;
    const std::int32_t near = delta < 0.0 ? n.left : n.right;
    const std::int32_t far = delta < 0.0 ? n.right : n.left;
    search_nearest(near, q, best, best_sq);
    if (delta * delta <= best_sq) search_nearest(far, q, best, best_sq);
  }

  void search_knn(std::int32_t ni, const Vec3& q, std::size_t k,
                  std::vector<std::pair<double, std::size_t>>& heap) const {
    const Node& n = nodes_[ni];
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::size_t pi = order_[i];
        const double d2 = (points_[pi] - q).squaredNorm();
        if (heap.size() < k) {
          heap.emplace_back(d2, pi);
          std::push_heap(heap.begin(), heap.end());
        } else if (std::make_pair(d2, pi) < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = {d2, pi};
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    const double delta = q[n.axis] - n.split;
    const std::int32_t near = delta < 0.0 ? n.left : n.right;
    const std::int32_t far = delta < 0.0 ? n.right : n.left;
    search_knn(near, q, k, heap);
    if (heap.size() < k || delta * delta <= heap.front().first)
      search_knn(far, q, k, heap);
  }

  void search_radius(std::int32_t ni, const Vec3& q, double r2,
                     std::vector<std::size_t>& out) const {
    const Node& n = nodes_[ni];
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::size_t pi = order_[i];
        if ((points_[pi] - q).squaredNorm() <= r2) out.push_back(pi);
      }
      return;
    }
    const double delta = q[n.axis] - n.split;
    const std::int32_t near = delta < 0.0 ? n.left : n.right;
    const std::int32_t far = delta < 0.0 ? n.right : n.left;
    search_radius(near, q, r2, out);
    if (delta * delta <= r2) search_radius(far, q, r2, out);
  }

  void count_radius(std::int32_t ni, const Vec3& q, double r2, std::size_t& n_out) const {
    const Node& n = nodes_[ni];
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i)
        if ((points_[order_[i]] - q).squaredNorm() <= r2) ++n_out;
      return;
    }
    const double delta = q[n.axis] - n.split;
    const std::int32_t near = delta < 0.0 ? n.left : n.right;
    const std::int32_t far = delta < 0.0 ? n.right : n.left;
    count_radius(near, q, r2, n_out);
    if (delta * delta <= r2) count_radius(far, q, r2, n_out);
  }

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

// ============================================================================
// Rays and triangle intersection
// ============================================================================

/// Direction need not be normalized; hit parameters are in units of
/// |direction|.
struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::Zero();
};

struct HitSet {
  std::vector<double> t_hit;  // one per ray, kNoHit when the ray misses
};

/// Minimum accepted hit parameter: hits closer than this fraction of
/// |direction| are treated as self-intersections of the ray origin.
inline constexpr double kRayOriginEpsilon = 1e-7;

/// Barycentric slack so rays through shared triangle edges register on at
/// least one neighbor instead of leaking between both.
inline constexpr double kEdgeEpsilon = 1e-12;

/// Moller-Trumbore. Returns the hit parameter in units of |direction|, or
/// kNoHit. `t_min` rejects near-origin hits.
inline double ray_triangle(const Ray& ray, const Vec3& v0, const Vec3& v1,
                           const Vec3& v2, double t_min = kRayOriginEpsilon) {
  const Vec3 e1 = v1 - v0;
  const Vec3 e2 = v2 - v0;
  const Vec3 pvec = ray.direction.cross(e2);
  const double det = e1.dot(pvec);
  if (det == 0.0) return kNoHit;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = ray.origin - v0;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < -kEdgeEpsilon || u > 1.0 + kEdgeEpsilon) return kNoHit;
  const Vec3 qvec = tvec.cross(e1);
  const double v = ray.direction.dot(qvec) * inv_det;
  if (v < -kEdgeEpsilon || u + v > 1.0 + kEdgeEpsilon) return kNoHit;
  const double t = e2.dot(qvec) * inv_det;
  if (t < t_min) return kNoHit;
  return t;
}

// ============================================================================
// Bvh — median-split bounding volume hierarchy over a triangle mesh
// ============================================================================

class Bvh {
 public:
  explicit Bvh(const TriangleMesh& mesh) {
    if (mesh.triangles.empty()) throw Error("cannot build raycast index over empty mesh");
    mesh.validate();
    vertices_ = mesh.vertices;
    triangles_ = mesh.triangles;
    tri_order_.resize(triangles_.size());
    std::iota(tri_order_.begin(), tri_order_.end(), std::size_t{0});
    std::vector<Vec3> centers(triangles_.size());
    std::vector<Aabb> boxes(triangles_.size());
    for (std::size_t i = 0; i < triangles_.size(); ++i) {
      const auto& t = triangles_[i];
      Aabb b;
      b.expand(vertices_[t[0]]);
      b.expand(vertices_[t[1]]);
      b.expand(vertices_[t[2]]);
      boxes[i] = b;
      centers[i] = b.center();
    }
    nodes_.reserve(2 * triangles_.size());
    root_ = build(0, triangles_.size(), centers, boxes);
  }

  /// Nearest hit parameter for one ray (units of |direction|); ties on equal
  /// t resolve to the lowest triangle index.
  double cast_ray(const Ray& ray) const {
    if (ray.direction.isZero(0.0)) throw Error("ray direction must be nonzero");
    double best = kNoHit;
    std::size_t best_tri = static_cast<std::size_t>(-1);
    const Vec3 inv_dir = ray.direction.cwiseInverse();
    walk(root_, ray, inv_dir, best, best_tri);
    return best;
  }

  /// Batched nearest-hit query; output order follows input ray order.
  HitSet cast_rays(const std::vector<Ray>& rays) const {
    HitSet hits;
    hits.t_hit.reserve(rays.size());
    for (const auto& r : rays) hits.t_hit.push_back(cast_ray(r));
    return hits;
  }

 private:
  struct Node {
    Aabb bounds;
    std::uint32_t begin = 0, end = 0;  // leaf triangle range in tri_order_
    std::int32_t left = -1, right = -1;
    bool is_leaf() const { return left < 0; }
  };

  static constexpr std::size_t kLeafSize = 4;

  std::int32_t build(std::size_t begin, std::size_t end, const std::vector<Vec3>& centers,
                     const std::vector<Aabb>& boxes) {
    Node node;
    for (std::size_t i = begin; i < end; ++i) {
      node.bounds.expand(boxes[tri_order_[i]].min);
      node.bounds.expand(boxes[tri_order_[i]].max);
    }
    if (end - begin <= kLeafSize) {
      node.begin = static_cast<std::uint32_t>(begin);
      node.end = static_cast<std::uint32_t>(end);
      std::sort(tri_order_.begin() + begin, tri_order_.begin() + end);
      nodes_.push_back(node);
      return static_cast<std::int32_t>(nodes_.size() - 1);
    }
    Aabb cb;
    for (std::size_t i = begin; i < end; ++i) cb.expand(centers[tri_order_[i]]);
    const Vec3 ext = cb.extent();
    int axis = 0;
    if (ext.y() > ext.x()) axis = 1;
    if (ext.z() > ext[axis]) axis = 2;
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(tri_order_.begin() + begin, tri_order_.begin() + mid,
                     tri_order_.begin() + end, [&](std::size_t a, std::size_t b) {
                       const double ca = centers[a][axis], cbv = centers[b][axis];
                       return ca < cbv || (ca == cbv && a < b);
                     });
    nodes_.push_back(node);
    const auto self = static_cast<std::int32_t>(nodes_.size() - 1);
    const auto l = build(begin, mid, centers, boxes);
    const auto r = build(mid, end, centers, boxes);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  // Slab test against the node bounds; conservative for t in [t_min, best].
  static bool hits_box(const Aabb& b, const Ray& ray, const Vec3& inv_dir, double best) {
    double t0 = 0.0, t1 = best;
    for (int a = 0; a < 3; ++a) {
      if (std::isinf(inv_dir[a])) {
        // ray parallel to this slab: origin must lie inside it
        if (ray.origin[a] < b.min[a] || ray.origin[a] > b.max[a]) return false;
        continue;
      }
      double near = (b.min[a] - ray.origin[a]) * inv_dir[a];
      double far = (b.max[a] - ray.origin[a]) * inv_dir[a];
      if (near > far) std::swap(near, far);
      t0 = std::max(t0, near);
      t1 = std::min(t1, far);
      if (t0 > t1) return false;
    }
    return true;
  }

  void walk(std::int32_t ni, const Ray& ray, const Vec3& inv_dir, double& best,
            std::size_t& best_tri) const {
    const Node& n = nodes_[ni];
    if (!hits_box(n.bounds, ray, inv_dir, best)) return;
    if (n.is_leaf()) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::size_t ti = tri_order_[i];
        const auto& t = triangles_[ti];
        const double hit =
            ray_triangle(ray, vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
        if (hit < best || (hit == best && hit != kNoHit && ti < best_tri)) {
          best = hit;
          best_tri = ti;
        }
      }
      return;
    }
    walk(n.left, ray, inv_dir, best, best_tri);
    walk(n.right, ray, inv_dir, best, best_tri);
  }

  std::vector<Vec3> vertices_;
  std::vector<std::array<std::uint32_t, 3>> triangles_;
  std::vector<std::size_t> tri_order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

/// Reference implementation used by tests and as the occlusion oracle: scan
/// every triangle for every ray.
inline double brute_force_ray_hit(const TriangleMesh& mesh, const Ray& ray,
                                  double t_min = kRayOriginEpsilon) {
  double best = kNoHit;
  for (const auto& t : mesh.triangles) {
    const double hit = ray_triangle(ray, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                    mesh.vertices[t[2]], t_min);
    best = std::min(best, hit);
  }
  return best;
}

}  // namespace recomb::spatial
