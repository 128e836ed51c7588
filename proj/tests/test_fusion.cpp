#include <recomb/fusion.hpp>
#include <recomb/synthgen.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace recomb;
using namespace recomb::fusion;

namespace {

SceneRecord make_scene(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(2.0, 25.0);
  SceneRecord scene;
  scene.sensor_height = 1.8;
  std::vector<double> intensity;
  for (std::size_t i = 0; i < n; ++i) {
    scene.cloud.positions.emplace_back(u(rng), u(rng) - 13.0, u(rng) / 10.0 - 1.8);
    intensity.push_back(u(rng));
  }
  scene.cloud.add_attribute("intensity", AttrKind::Float64, std::move(intensity));
  return scene;
}

ObjectRecord make_object(std::size_t n, const Vec3& around) {
  ObjectRecord rec;
  std::mt19937_64 rng(555);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  std::vector<double> intensity;
  for (std::size_t i = 0; i < n; ++i) {
    rec.cloud.positions.push_back(around + Vec3(u(rng), u(rng), u(rng) * 3));
    intensity.push_back(100.0 + static_cast<double>(i));
  }
  if (n > 0)
    rec.cloud.add_attribute("intensity", AttrKind::Float64, std::move(intensity));
  rec.relative_translation = n > 0 ? centroid(rec.cloud) : around;
  rec.mesh_id = "obj_mesh";
  rec.object_type = "humanoid/test";
  rec.pose_tag = "test";
  return rec;
}

}  // namespace

TEST_CASE("recombine counts behave", "[fusion]") {
  std::mt19937_64 rng(401);
  SceneRecord scene;
  scene.sensor_height = 1.8;
  for (int i = 0; i < 10; ++i) scene.cloud.positions.emplace_back(i + 1.0, 0, 0);
  scene.cloud.add_attribute("intensity", AttrKind::Float64,
                            {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});

  const auto object = make_object(5, Vec3(4, 4, 0));

  occlusion::OcclusionResult occ;
  occ.occluded_indices = {2, 5, 7};
  for (auto i : occ.occluded_indices)
    occ.occluded_points.positions.push_back(scene.cloud.positions[i]);

  const auto rec = recombine(scene, object, occ);
  CHECK(rec.cloud.size() == 12);  // 10 - 3 + 5
  CHECK(rec.scene_point_count() == 7);
  REQUIRE(rec.provenance.size() == 12);
  for (std::size_t i = 0; i < 7; ++i) CHECK(rec.provenance[i] == -1);
  for (std::size_t i = 7; i < 12; ++i) CHECK(rec.provenance[i] == 0);
  CHECK(rec.object_ids == std::vector<std::string>{"obj_mesh"});
  REQUIRE(rec.labels.size() == 1);

  // object intensities appear unmodified after the scene block
  const auto* intensity = rec.cloud.find_attribute("intensity");
  REQUIRE(intensity);
  CHECK(intensity->values[7] == 100.0);
  CHECK(intensity->values[11] == 104.0);
}

TEST_CASE("degenerate recombine still emits a label from metadata", "[fusion]") {
  std::mt19937_64 rng(402);
  const auto scene = make_scene(50, rng);
  const auto object = make_object(0, Vec3(5, 5, 0));
  const occlusion::OcclusionResult occ;  // empty
  const auto rec = recombine(scene, object, occ);
  CHECK(rec.cloud.size() == scene.cloud.size());
  REQUIRE(rec.labels.size() == 1);
  CHECK(rec.labels[0].object_type == "humanoid/test");
  rec.labels[0].validate();  // half extents stay positive
}

TEST_CASE("attribute schemas are unified with a reported sentinel", "[fusion]") {
  std::mt19937_64 rng(403);
  auto scene = make_scene(20, rng);
  std::vector<double> ring(20, 3.0);
  scene.cloud.add_attribute("ring", AttrKind::Int64, ring);

  auto object = make_object(4, Vec3(6, 0, 0));
  std::vector<double> heat(4, 9.0);
  object.cloud.add_attribute("heat", AttrKind::Float64, heat);

  const occlusion::OcclusionResult occ;
  const auto rec = recombine(scene, object, occ);
  // object lacked ring, scene lacked heat
  CHECK(std::count(rec.filled_attributes.begin(), rec.filled_attributes.end(),
                   "object:ring") == 1);
  CHECK(std::count(rec.filled_attributes.begin(), rec.filled_attributes.end(),
                   "scene:heat") == 1);
  const auto* ring_attr = rec.cloud.find_attribute("ring");
  CHECK(ring_attr->values[20] == 0.0);  // sentinel on the object block
  const auto* heat_attr = rec.cloud.find_attribute("heat");
  CHECK(heat_attr->values[0] == 0.0);  // sentinel on the scene block
  CHECK(heat_attr->values[23] == 9.0);
}

TEST_CASE("attribute type conflicts are refused", "[fusion]") {
  std::mt19937_64 rng(404);
  auto scene = make_scene(5, rng);
  std::vector<double> ring(5, 1.0);
  scene.cloud.add_attribute("ring", AttrKind::Int64, ring);

  auto object = make_object(2, Vec3(6, 0, 0));
  object.cloud.add_attribute("ring", AttrKind::Float64, {1.5, 2.5});

  const occlusion::OcclusionResult occ;
  CHECK_THROWS_WITH(recombine(scene, object, occ),
                    Catch::Matchers::ContainsSubstring("type conflict"));
}

TEST_CASE("make_label wraps a cube correctly", "[fusion]") {
  const auto cube = synth::Primitive::box(Vec3(0, 0, 0.5), Vec3(1, 1, 1)).mesh();
  ObjectRecord object;
  object.cloud.positions = {{0, 0, 0.5}};
  object.relative_translation = Vec3(0, 0, 0.5);
  object.object_type = "box";
  object.mesh_id = "cube";

  SECTION("yaw 0") {
    const auto box = make_label(object, cube);
    CHECK((box.center - Vec3(0, 0, 0.5)).norm() < 1e-12);
    CHECK((box.half_extents - Vec3(0.5, 0.5, 0.5)).norm() < 1e-12);
  }
  SECTION("yaw 45 deg keeps the extents in the rotated frame") {
    object.yaw = deg_to_rad(45.0);
    const auto rotated =
        transform_mesh(cube, SimilarityTransform::rotate_z(object.yaw, Vec3(0, 0, 0)));
    const auto box = make_label(object, rotated);
    CHECK((box.half_extents - Vec3(0.5, 0.5, 0.5)).norm() < 1e-9);
    CHECK(box.yaw == object.yaw);
  }
}

TEST_CASE("humanoid label contains every object point", "[fusion]") {
  const auto prim = synth::Primitive::humanoid(0, 0, 0, deg_to_rad(30.0));
  const auto mesh = prim.mesh();
  ObjectRecord object;
  std::mt19937_64 rng(405);
  // sample points on the mesh as a stand-in for a lab capture
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const auto& t = mesh.triangles[static_cast<std::size_t>(u(rng) * mesh.triangles.size())];
    const double a = u(rng), b = u(rng) * (1 - a);
    object.cloud.positions.push_back(mesh.vertices[t[0]] * (1 - a - b) +
                                     mesh.vertices[t[1]] * a + mesh.vertices[t[2]] * b);
  }
  object.relative_translation = centroid(object.cloud);
  object.yaw = deg_to_rad(30.0);
  const auto box = make_label(object, mesh);
  for (const auto& p : object.cloud.positions) CHECK(box.contains(p, 0.01));
}

TEST_CASE("place_at_azimuth", "[fusion]") {
  const auto mesh = synth::Primitive::box(Vec3(10, 0, 0), Vec3(1, 1, 2)).mesh();
  auto object = make_object(50, Vec3(10, 0, 0));
  object.yaw = 0.25;

  SECTION("placing at the original azimuth is the identity") {
    const auto [placed, pm] = place_at_azimuth(object, mesh, 0.0);
    for (std::size_t i = 0; i < object.cloud.size(); ++i)
      CHECK((placed.cloud.positions[i] - object.cloud.positions[i]).norm() < 1e-12);
    CHECK(placed.yaw == Catch::Approx(object.yaw));
  }

  SECTION("rotating 180 degrees preserves every range") {
    const auto [placed, pm] = place_at_azimuth(object, mesh, deg_to_rad(180.0));
    CHECK(placed.relative_translation.norm() ==
          Catch::Approx(object.relative_translation.norm()).margin(1e-9));
    for (std::size_t i = 0; i < object.cloud.size(); ++i)
      CHECK(std::abs(placed.cloud.positions[i].norm() - object.cloud.positions[i].norm()) <
            1e-9);
    CHECK(placed.relative_translation.x() == Catch::Approx(-10.0).margin(1e-9));
  }

  SECTION("off-grid azimuth is refused naming the step") {
    CHECK_THROWS_WITH(place_at_azimuth(object, mesh, deg_to_rad(12.3456)),
                      Catch::Matchers::ContainsSubstring("1.0"));
  }

  SECTION("any grid azimuth preserves the range histogram") {
    std::mt19937_64 rng(406);
    std::uniform_int_distribution<int> pick(0, 359);
    for (int trial = 0; trial < 10; ++trial) {
      const double az = deg_to_rad(pick(rng));
      const auto [placed, pm] = place_at_azimuth(object, mesh, az);
      std::vector<double> before, after;
      for (const auto& p : object.cloud.positions) before.push_back(p.norm());
      for (const auto& p : placed.cloud.positions) after.push_back(p.norm());
      std::sort(before.begin(), before.end());
      std::sort(after.begin(), after.end());
      for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(std::abs(before[i] - after[i]) < 1e-9);
    }
  }

  SECTION("attributes ride along unchanged") {
    const auto [placed, pm] = place_at_azimuth(object, mesh, deg_to_rad(90.0));
    CHECK(placed.cloud.attributes[0].values == object.cloud.attributes[0].values);
  }
}

TEST_CASE("sequential insertion re-occludes earlier objects", "[fusion]") {
  std::mt19937_64 rng(407);

  // a dense wall of scene points behind everything
  SceneRecord scene;
  scene.sensor_height = 1.5;
  for (int y = -20; y <= 20; ++y)
    for (int z = -5; z <= 5; ++z)
      scene.cloud.positions.emplace_back(20.0, y * 0.2, z * 0.2);
  std::vector<double> intensity(scene.cloud.size(), 50.0);
  scene.cloud.add_attribute("intensity", AttrKind::Float64, intensity);

  // first object at 10 m, second at 5 m shadowing part of the first
  auto far_obj = make_object(200, Vec3(10, 0, 0));
  const auto far_mesh = synth::Primitive::box(Vec3(10, 0, 0), Vec3(0.8, 0.8, 1.6)).mesh();
  auto near_obj = make_object(200, Vec3(5, 0, 0));
  near_obj.mesh_id = "near_mesh";
  const auto near_mesh = synth::Primitive::box(Vec3(5, 0, 0), Vec3(0.8, 0.8, 1.6)).mesh();

  const auto result = insert_sequence(
      scene, {{far_obj, far_mesh}, {near_obj, near_mesh}}, {});

  REQUIRE(result.occluded_per_step.size() == 2);
  CHECK(result.occluded_per_step[0] > 0);
  CHECK(result.occluded_per_step[1] > 0);
  CHECK(result.scene.labels.size() == 2);
  CHECK(result.scene.object_ids ==
        std::vector<std::string>{"obj_mesh", "near_mesh"});

  // conservation across the whole sequence
  CHECK(result.scene.cloud.size() + result.total_occluded ==
        scene.cloud.size() + far_obj.cloud.size() + near_obj.cloud.size());

  // some of the far object's points sit in the near object's shadow, so the
  // second step must have removed points that belonged to the first object
  std::size_t far_points_left = 0;
  for (int p : result.scene.provenance)
    if (p == 0) ++far_points_left;
  CHECK(far_points_left < far_obj.cloud.size());
}
