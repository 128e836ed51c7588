#include <recomb/spatial.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace recomb;
using namespace recomb::spatial;

namespace {

std::vector<Vec3> random_points(std::size_t n, std::mt19937_64& rng, double extent = 10.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  return pts;
}

std::pair<std::size_t, double> brute_nearest(const std::vector<Vec3>& pts, const Vec3& q) {
  std::size_t best = 0;
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d2 = (pts[i] - q).squaredNorm();
    if (d2 < best_sq) {
      best_sq = d2;
      best = i;
    }
  }
  return {best, std::sqrt(best_sq)};
}

TriangleMesh random_mesh(std::size_t tris, std::mt19937_64& rng, double extent = 5.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  TriangleMesh m;
  for (std::size_t i = 0; i < tris; ++i) {
    const auto base = static_cast<std::uint32_t>(m.vertices.size());
    const Vec3 a(u(rng), u(rng), u(rng));
    m.vertices.push_back(a);
    m.vertices.push_back(a + 0.3 * Vec3(u(rng), u(rng), u(rng)).normalized());
    m.vertices.push_back(a + 0.3 * Vec3(u(rng), u(rng), u(rng)).normalized());
    m.triangles.push_back({base, base + 1, base + 2});
  }
  return m;
}

}  // namespace

TEST_CASE("kd-tree single point", "[spatial]") {
  KdTree tree(std::vector<Vec3>{{1, 2, 3}});
  const auto [idx, dist] = tree.nearest(Vec3(5, 5, 5));
  CHECK(idx == 0);
  CHECK(dist == Catch::Approx((Vec3(1, 2, 3) - Vec3(5, 5, 5)).norm()));
}

TEST_CASE("kd-tree refuses an empty point set", "[spatial]") {
  CHECK_THROWS_AS(KdTree(std::vector<Vec3>{}), Error);
}

TEST_CASE("kd-tree query on an indexed point returns distance zero", "[spatial]") {
  std::mt19937_64 rng(17);
  const auto pts = random_points(500, rng);
  KdTree tree(pts);
  const auto [idx, dist] = tree.nearest(pts[123]);
  CHECK(idx == 123);
  CHECK(dist == 0.0);
}

TEST_CASE("kd-tree nearest matches brute force", "[spatial]") {
  std::mt19937_64 rng(29);
  const auto pts = random_points(1000, rng);
  KdTree tree(pts);
  for (int i = 0; i < 100; ++i) {
    const Vec3 q = random_points(1, rng, 12.0)[0];
    const auto [bi, bd] = brute_nearest(pts, q);
    const auto [ti, td] = tree.nearest(q);
    CHECK(ti == bi);
    CHECK(std::abs(td - bd) <= 1e-12);
  }
}

TEST_CASE("kd-tree k-nearest and radius match brute force", "[spatial]") {
  std::mt19937_64 rng(31);
  const auto pts = random_points(400, rng);
  KdTree tree(pts);
  std::uniform_real_distribution<double> ur(0.5, 4.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Vec3 q = random_points(1, rng, 12.0)[0];

    std::vector<std::pair<double, std::size_t>> ref;
    for (std::size_t i = 0; i < pts.size(); ++i)
      ref.emplace_back((pts[i] - q).squaredNorm(), i);
    std::sort(ref.begin(), ref.end());

    const std::size_t k = 7;
    const auto knn = tree.k_nearest(q, k);
    REQUIRE(knn.size() == k);
    for (std::size_t i = 0; i < k; ++i) CHECK(knn[i].first == ref[i].second);

    const double r = ur(rng);
    auto within = tree.radius_search(q, r);
    std::vector<std::size_t> ref_within;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if ((pts[i] - q).squaredNorm() <= r * r) ref_within.push_back(i);
    CHECK(within == ref_within);
    CHECK(tree.count_within(q, r) == ref_within.size());
  }
}

TEST_CASE("single triangle ray hits", "[spatial]") {
  TriangleMesh m;
  m.vertices = {{5, -1, -1}, {5, 1, -1}, {5, 0, 1.5}};
  m.triangles = {{0, 1, 2}};
  Bvh bvh(m);

  SECTION("through the interior") {
    const double t = bvh.cast_ray({Vec3::Zero(), Vec3(1, 0, 0)});
    CHECK(t == Catch::Approx(5.0));
  }
  SECTION("parallel to the plane") {
    const double t = bvh.cast_ray({Vec3::Zero(), Vec3(0, 1, 0)});
    CHECK(t == kNoHit);
  }
  SECTION("hit parameter scales with |direction|") {
    const double t = bvh.cast_ray({Vec3::Zero(), Vec3(10, 0, 0)});
    CHECK(t == Catch::Approx(0.5));
  }
  SECTION("origin on the surface pointing away") {
    const double t = bvh.cast_ray({Vec3(5, 0, 0), Vec3(1, 0, 0)});
    CHECK(t == kNoHit);
  }
}

TEST_CASE("empty mesh rejected by the raycast index", "[spatial]") {
  TriangleMesh m;
  CHECK_THROWS_AS(Bvh(m), Error);
}

TEST_CASE("bvh equals brute force on a random triangle soup", "[spatial]") {
  std::mt19937_64 rng(41);
  const TriangleMesh m = random_mesh(300, rng);
  Bvh bvh(m);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  std::size_t hits = 0;
  for (int i = 0; i < 2000; ++i) {
    const Ray ray{Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng))};
    if (ray.direction.isZero(0.0)) continue;
    const double tb = brute_force_ray_hit(m, ray);
    const double ta = bvh.cast_ray(ray);
    if (std::isinf(tb)) {
      CHECK(std::isinf(ta));
    } else {
      CHECK(ta == Catch::Approx(tb).epsilon(1e-9));
      ++hits;
    }
  }
  CHECK(hits > 100);  // the soup is dense enough that the test is non-vacuous
}

TEST_CASE("ray through a shared edge reports exactly one hit", "[spatial]") {
  // two triangles sharing the edge x=5, y=0, z in [-1,1]
  TriangleMesh m;
  m.vertices = {{5, 0, -1}, {5, 0, 1}, {5, -2, 0}, {5, 2, 0}};
  m.triangles = {{0, 1, 2}, {0, 1, 3}};
  Bvh bvh(m);
  const double t = bvh.cast_ray({Vec3::Zero(), Vec3(5, 0, 0)});
  CHECK(t == Catch::Approx(1.0));  // a hit, not a leak between the neighbors
}

TEST_CASE("batched cast keeps input order and is deterministic", "[spatial]") {
  std::mt19937_64 rng(43);
  const TriangleMesh m = random_mesh(50, rng);
  Bvh bvh(m);
  std::vector<Ray> rays;
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int i = 0; i < 200; ++i)
    rays.push_back({Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng))});
  const HitSet a = bvh.cast_rays(rays);
  const HitSet b = bvh.cast_rays(rays);
  REQUIRE(a.t_hit.size() == rays.size());
  CHECK(a.t_hit == b.t_hit);
  for (std::size_t i = 0; i < rays.size(); ++i)
    CHECK(a.t_hit[i] == bvh.cast_ray(rays[i]));
}
