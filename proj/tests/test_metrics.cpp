#include <recomb/metrics.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace recomb;
using namespace recomb::metrics;

namespace {

PointCloud cloud_of(std::initializer_list<Vec3> pts) {
  PointCloud c;
  c.positions = pts;
  return c;
}

PointCloud random_cloud(std::size_t n, std::mt19937_64& rng, double extent = 5.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.positions.emplace_back(u(rng), u(rng), u(rng));
  return c;
}

// O(n*m) oracle shared by all four metrics.
struct BruteMetrics {
  double chamfer, hausdorff, rmse_pq, precision, recall;
};

BruteMetrics brute(const PointCloud& p, const PointCloud& q, double tau) {
  auto nearest_sq = [](const Vec3& x, const PointCloud& set) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : set.positions) best = std::min(best, (x - y).squaredNorm());
    return best;
  };
  double sum_pq = 0, sum_qp = 0, max_pq = 0, max_qp = 0;
  std::size_t in_pq = 0, in_qp = 0;
  for (const auto& x : p.positions) {
    const double d2 = nearest_sq(x, q);
    sum_pq += d2;
    max_pq = std::max(max_pq, d2);
    if (std::sqrt(d2) < tau) ++in_pq;
  }
  for (const auto& y : q.positions) {
    const double d2 = nearest_sq(y, p);
    sum_qp += d2;
    max_qp = std::max(max_qp, d2);
    if (std::sqrt(d2) < tau) ++in_qp;
  }
  BruteMetrics r{};
  r.chamfer = sum_pq / p.size() + sum_qp / q.size();
  r.hausdorff = std::sqrt(std::max(max_pq, max_qp));
  r.rmse_pq = std::sqrt(sum_pq / p.size());
  r.precision = double(in_pq) / p.size();
  r.recall = double(in_qp) / q.size();
  return r;
}

}  // namespace

TEST_CASE("chamfer hand values", "[metrics]") {
  const auto p = cloud_of({{0, 0, 0}});
  const auto q = cloud_of({{1, 0, 0}});
  CHECK(chamfer(p, p) == 0.0);
  CHECK(chamfer(p, q) == Catch::Approx(2.0));
  CHECK_THROWS_AS(chamfer(p, PointCloud{}), Error);
}

TEST_CASE("hausdorff hand values", "[metrics]") {
  const auto p = cloud_of({{0, 0, 0}, {1, 0, 0}});
  const auto q = cloud_of({{0, 0, 0}});
  CHECK(hausdorff(p, p) == 0.0);
  CHECK(hausdorff(p, q) == Catch::Approx(1.0));
}

TEST_CASE("rmse hand values", "[metrics]") {
  const auto p = cloud_of({{0, 0, 0}});
  const auto q = cloud_of({{3, 4, 0}});
  CHECK(rmse(p, q) == Catch::Approx(5.0));
  const auto sub = cloud_of({{3, 4, 0}});
  CHECK(rmse(sub, q) == 0.0);
}

TEST_CASE("f1 hand values", "[metrics]") {
  const auto p = cloud_of({{0, 0, 0}, {1, 0, 0}});
  SECTION("identical clouds") {
    const auto r = f1(p, p, 0.05);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == 1.0);
  }
  SECTION("disjoint clouds beyond tau") {
    const auto q = cloud_of({{10, 0, 0}});
    const auto r = f1(p, q, 0.05);
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
  }
  SECTION("threshold is strict") {
    const auto q = cloud_of({{0.05, 0, 0}, {1.05, 0, 0}});
    const auto r = f1(p, q, 0.05);
    CHECK(r.precision == 0.0);  // distance exactly tau does not count
  }
  SECTION("tau must be positive") {
    CHECK_THROWS_AS(f1(p, p, 0.0), Error);
  }
}

TEST_CASE("metrics match the brute-force oracle", "[metrics]") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<std::size_t> sz(1, 300);
    const auto p = random_cloud(sz(rng), rng);
    const auto q = random_cloud(sz(rng), rng);
    const double tau = 0.5;
    const auto ref = brute(p, q, tau);
    CHECK(std::abs(chamfer(p, q) - ref.chamfer) <= 1e-12);
    CHECK(std::abs(hausdorff(p, q) - ref.hausdorff) <= 1e-12);
    CHECK(std::abs(rmse(p, q) - ref.rmse_pq) <= 1e-12);
    const auto r = f1(p, q, tau);
    CHECK(r.precision == ref.precision);
    CHECK(r.recall == ref.recall);
  }
}

TEST_CASE("metric symmetry properties", "[metrics]") {
  std::mt19937_64 rng(67);
  const auto p = random_cloud(150, rng);
  const auto q = random_cloud(80, rng);
  CHECK(chamfer(p, q) == Catch::Approx(chamfer(q, p)).epsilon(1e-15));
  CHECK(hausdorff(p, q) == Catch::Approx(hausdorff(q, p)).epsilon(1e-15));
  const auto a = f1(p, q, 0.4);
  const auto b = f1(q, p, 0.4);
  CHECK(a.precision == b.recall);
  CHECK(a.recall == b.precision);
  CHECK(a.f1 == Catch::Approx(b.f1));
}

TEST_CASE("f1 is non-decreasing in tau", "[metrics]") {
  std::mt19937_64 rng(71);
  const auto p = random_cloud(200, rng);
  const auto q = random_cloud(200, rng);
  double prev = 0.0;
  for (double tau = 0.05; tau < 3.0; tau *= 1.7) {
    const double cur = f1(p, q, tau).f1;
    CHECK(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("prune_to_roi keeps inclusive boundaries", "[metrics]") {
  Aabb roi;
  roi.min = Vec3(0, 0, 0);
  roi.max = Vec3(1, 1, 1);
  auto ref = cloud_of({{0, 0, 0}, {1, 1, 1}, {2, 0, 0}});
  ref.add_attribute("intensity", AttrKind::Float64, {7, 8, 9});
  const auto cand = cloud_of({{0.5, 0.5, 0.5}});

  const auto [pr, pc] = prune_to_roi(ref, cand, roi);
  REQUIRE(pr.size() == 2);  // boundary points kept
  CHECK(pr.attributes[0].values == std::vector<double>{7, 8});
  CHECK(pc.size() == 1);

  SECTION("roi covering nothing") {
    Aabb far;
    far.min = Vec3(50, 50, 50);
    far.max = Vec3(51, 51, 51);
    const auto [er, ec] = prune_to_roi(ref, cand, far);
    CHECK(er.empty());
    CHECK(ec.empty());
  }
  SECTION("roi covering everything is the identity") {
    Aabb all;
    all.min = Vec3(-10, -10, -10);
    all.max = Vec3(10, 10, 10);
    const auto [ar, ac] = prune_to_roi(ref, cand, all);
    CHECK(ar.size() == ref.size());
    CHECK(ac.size() == cand.size());
  }
}

TEST_CASE("noise reference", "[metrics]") {
  std::mt19937_64 rng(73);
  const auto a = random_cloud(10000, rng, 8.0);

  SECTION("identical scans give a zero report") {
    const auto r = noise_reference(a, a, 0.05);
    CHECK(r.chamfer == 0.0);
    CHECK(r.hausdorff == 0.0);
    CHECK(r.rmse == 0.0);
    CHECK(r.f1 == 1.0);
  }

  SECTION("gaussian perturbation lands near sigma*sqrt(3)") {
    const double sigma = 0.01;
    std::normal_distribution<double> g(0.0, sigma);
    PointCloud b = a;
    for (auto& p : b.positions) p += Vec3(g(rng), g(rng), g(rng));
    const auto r = noise_reference(a, b, 0.05);
    // nearest neighbor may be closer than the displaced twin, so rmse is
    // bounded above by sigma*sqrt(3); with points this sparse it is close
    const double expected = sigma * std::sqrt(3.0);
    CHECK(r.rmse == Catch::Approx(expected).epsilon(0.15));
    CHECK(r.f1 > 0.99);
  }
}

TEST_CASE("report serialization carries the table schema", "[metrics]") {
  MetricsReport r;
  r.chamfer = 0.0003;
  r.rmse = 0.0125;
  r.precision = r.recall = r.f1 = 0.999602;
  r.tau = 0.05;
  r.count_p = 10;
  r.count_q = 12;
  CHECK(csv_header() ==
        "chamfer,hausdorff,rmse,precision,recall,f1,tau,count_p,count_q,chamfer_root,f1_pct");
  const std::string row = to_csv_row(r);
  CHECK(row.find("99.9602") != std::string::npos);  // percentage column
  const std::string j = to_json(r);
  CHECK(j.find("\"chamfer\"") != std::string::npos);
  CHECK(j.find("\"f1_pct\"") != std::string::npos);
}
