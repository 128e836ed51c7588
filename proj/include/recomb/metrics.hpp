// Copyright 2026 recomb contributors
// SPDX-License-Identifier: Apache-2.0
//
// Point-cloud dissimilarity metrics and the evaluation protocol helpers
// (ROI pruning, noise reference). Chamfer is reported squared (m^2); the
// report additionally carries its square root since published tables are
// ambiguous about which convention they print.

#pragma once

#include <recomb/core.hpp>
#include <recomb/spatial.hpp>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace recomb::metrics {

struct MetricsReport {
  double chamfer = 0.0;    // m^2
  double hausdorff = 0.0;  // m
  double rmse = 0.0;       // m, candidate -> reference
  double precision = 0.0;  // fractions in [0, 1]
  double recall = 0.0;
  double f1 = 0.0;
  double tau = 0.0;  // m
  std::size_t count_p = 0;  // candidate size
  std::size_t count_q = 0;  // reference size

  double chamfer_root() const { return std::sqrt(chamfer); }
  double f1_pct() const { return 100.0 * f1; }
};

namespace detail {

inline void require_non_empty(const PointCloud& p, const PointCloud& q) {
  if (p.empty() || q.empty()) throw Error("metric undefined for empty point cloud");
}

/// Mean squared nearest-neighbor distance from each point of `from` into the
/// indexed set, plus the maximum (non-squared) such distance.
struct DirectionalStats {
  double mean_sq = 0.0;
  double max_dist = 0.0;
};

inline DirectionalStats directional(const PointCloud& from, const spatial::KdTree& into) {
  DirectionalStats s;
  for (const auto& p : from.positions) {
    const double d2 = into.nearest_distance_sq(p);
    s.mean_sq += d2;
    s.max_dist = std::max(s.max_dist, std::sqrt(d2));
  }
  s.mean_sq /= static_cast<double>(from.size());
  return s;
}

inline std::size_t count_within(const PointCloud& from, const spatial::KdTree& into,
                                double tau) {
  std::size_t n = 0;
  const double tau_sq = tau * tau;
  for (const auto& p : from.positions)
    if (into.nearest_distance_sq(p) < tau_sq) ++n;  // strict, by definition
  return n;
}

}  // namespace detail

/// Symmetric mean of squared nearest-neighbor distances: the sum of both
/// directional means.
inline double chamfer(const PointCloud& p, const PointCloud& q) {
  detail::require_non_empty(p, q);
  const spatial::KdTree tp(p.positions), tq(q.positions);
  return detail::directional(p, tq).mean_sq + detail::directional(q, tp).mean_sq;
}

/// Maximum over both directions of the farthest nearest-neighbor distance.
inline double hausdorff(const PointCloud& p, const PointCloud& q) {
  detail::require_non_empty(p, q);
  const spatial::KdTree tp(p.positions), tq(q.positions);
  return std::max(detail::directional(p, tq).max_dist,
                  detail::directional(q, tp).max_dist);
}

/// Directional root mean squared nearest-neighbor distance from P into Q.
inline double rmse(const PointCloud& p, const PointCloud& q) {
  detail::require_non_empty(p, q);
  const spatial::KdTree tq(q.positions);
  return std::sqrt(detail::directional(p, tq).mean_sq);
}

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Symmetric nearest-neighbor score with strict threshold tau: precision is
/// the fraction of P strictly within tau of Q, recall the converse. F1 is
/// their harmonic mean, 0 when both are 0.
inline F1Result f1(const PointCloud& p, const PointCloud& q, double tau) {
  if (!(tau > 0.0)) throw Error("tau must be positive");
  detail::require_non_empty(p, q);
  const spatial::KdTree tp(p.positions), tq(q.positions);
  F1Result r;
  r.precision = static_cast<double>(detail::count_within(p, tq, tau)) /
                static_cast<double>(p.size());
  r.recall = static_cast<double>(detail::count_within(q, tp, tau)) /
             static_cast<double>(q.size());
  const double denom = r.precision + r.recall;
  r.f1 = denom > 0.0 ? 2.0 * r.precision * r.recall / denom : 0.0;
  return r;
}

/// Filter both clouds to points inside the ROI (inclusive bounds).
inline std::pair<PointCloud, PointCloud> prune_to_roi(const PointCloud& reference,
                                                      const PointCloud& candidate,
                                                      const Aabb& roi) {
  roi.validate();
  auto prune = [&roi](const PointCloud& in) {
    PointCloud out;
    for (auto& a : in.attributes) out.attributes.push_back({a.name, a.kind, {}});
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (!roi.contains(in.positions[i])) continue;
      out.positions.push_back(in.positions[i]);
      for (std::size_t k = 0; k < in.attributes.size(); ++k)
        out.attributes[k].values.push_back(in.attributes[k].values[i]);
    }
    return out;
  };
  return {prune(reference), prune(candidate)};
}

/// Full report between a candidate cloud and a reference cloud.
inline MetricsReport compute_report(const PointCloud& reference,
                                    const PointCloud& candidate, double tau) {
  if (!(tau > 0.0)) throw Error("tau must be positive");
  detail::require_non_empty(candidate, reference);
  const spatial::KdTree tref(reference.positions), tcand(candidate.positions);
  const auto cand_to_ref = detail::directional(candidate, tref);
  const auto ref_to_cand = detail::directional(reference, tcand);

  MetricsReport r;
  r.tau = tau;
  r.count_p = candidate.size();
  r.count_q = reference.size();
  r.chamfer = cand_to_ref.mean_sq + ref_to_cand.mean_sq;
  r.hausdorff = std::max(cand_to_ref.max_dist, ref_to_cand.max_dist);
  r.rmse = std::sqrt(cand_to_ref.mean_sq);
  r.precision = static_cast<double>(detail::count_within(candidate, tref, tau)) /
                static_cast<double>(candidate.size());
  r.recall = static_cast<double>(detail::count_within(reference, tcand, tau)) /
             static_cast<double>(reference.size());
  const double denom = r.precision + r.recall;
  r.f1 = denom > 0.0 ? 2.0 * r.precision * r.recall / denom : 0.0;
  return r;
}

/// Plausibility baseline: metrics between two scans of the same unchanged
/// scene. Deviations below this report are indistinguishable from sensor
/// noise.
inline MetricsReport noise_reference(const PointCloud& scan_a, const PointCloud& scan_b,
                                     double tau) {
  return compute_report(scan_a, scan_b, tau);
}

// ----------------------------------------------------------------------------
// Report serialization (CSV and JSON), one row/object per comparison.
// ----------------------------------------------------------------------------

inline std::string csv_header() {
  return "chamfer,hausdorff,rmse,precision,recall,f1,tau,count_p,count_q,"
         "chamfer_root,f1_pct";
}

inline std::string to_csv_row(const MetricsReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu,%zu,%.17g,%.4f",
                r.chamfer, r.hausdorff, r.rmse, r.precision, r.recall, r.f1, r.tau,
                r.count_p, r.count_q, r.chamfer_root(), r.f1_pct());
  return buf;
}

inline std::string to_json(const MetricsReport& r) {
  char buf[768];
  std::snprintf(buf, sizeof(buf),
                "{\"chamfer\": %.17g, \"hausdorff\": %.17g, \"rmse\": %.17g, "
                "\"precision\": %.17g, \"recall\": %.17g, \"f1\": %.17g, "
                "\"tau\": %.17g, \"count_p\": %zu, \"count_q\": %zu, "
                "\"chamfer_root\": %.17g, \"f1_pct\": %.4f}",
                r.chamfer, r.hausdorff, r.rmse, r.precision, r.recall, r.f1, r.tau,
                r.count_p, r.count_q, r.chamfer_root(), r.f1_pct());
  return buf;
}

}  // namespace recomb::metrics
