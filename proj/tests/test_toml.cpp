#include <recomb/toml.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace recomb;
using namespace recomb::toml;

TEST_CASE("scalar values parse with their types", "[toml]") {
  const auto t = parse(
      "name = \"run one\"\n"
      "count = 42\n"
      "ratio = 0.75\n"
      "eps = 1e-6\n"
      "big = 1_000_000\n"
      "on = true\n"
      "off = false\n");
  CHECK(t.get_string("name") == "run one");
  CHECK(t.get_int("count") == 42);
  CHECK(t.get_double("ratio") == 0.75);
  CHECK(t.get_double("eps") == 1e-6);
  CHECK(t.get_int("big") == 1000000);
  CHECK(t.get_bool("on", false));
  CHECK_FALSE(t.get_bool("off", true));
  // integers read fine through the double getter
  CHECK(t.get_double("count") == 42.0);
}

TEST_CASE("comments and blank lines are skipped", "[toml]") {
  const auto t = parse(
      "# header comment\n"
      "\n"
      "a = 1  # trailing comment\n"
      "   \n"
      "b = 2\n");
  CHECK(t.get_int("a") == 1);
  CHECK(t.get_int("b") == 2);
}

TEST_CASE("tables and nesting", "[toml]") {
  const auto t = parse(
      "top = 1\n"
      "[alpha]\n"
      "x = 10\n"
      "[alpha.beta]\n"
      "y = 20\n"
      "[gamma]\n"
      "z = 30\n");
  CHECK(t.get_int("top") == 1);
  const auto& alpha = t.at("alpha").table();
  CHECK(alpha.get_int("x") == 10);
  CHECK(alpha.at("beta").table().get_int("y") == 20);
  CHECK(t.at("gamma").table().get_int("z") == 30);
}

TEST_CASE("arrays of scalars, nested and multiline", "[toml]") {
  const auto t = parse(
      "flat = [0.1, 0.05]\n"
      "nested = [[1, 2], [3]]\n"
      "multi = [\n"
      "  1.5,\n"
      "  2.5,  # comment inside\n"
      "]\n"
      "empty = []\n");
  CHECK(t.get_double_array("flat", {}) == std::vector<double>{0.1, 0.05});
  const auto& nested = t.at("nested").array();
  REQUIRE(nested.size() == 2);
  CHECK(nested[0].array()[1].integer() == 2);
  CHECK(t.get_double_array("multi", {}) == std::vector<double>{1.5, 2.5});
  CHECK(t.at("empty").array().empty());
}

TEST_CASE("arrays of tables accumulate in order", "[toml]") {
  const auto t = parse(
      "[[scene]]\n"
      "cloud = \"a.ply\"\n"
      "[[scene]]\n"
      "cloud = \"b.ply\"\n"
      "sensor_height = 2.0\n");
  const auto& scenes = t.at("scene").array();
  REQUIRE(scenes.size() == 2);
  CHECK(scenes[0].table().get_string("cloud") == "a.ply");
  CHECK(scenes[1].table().get_string("cloud") == "b.ply");
  CHECK(scenes[1].table().get_double("sensor_height") == 2.0);
}

TEST_CASE("string escapes", "[toml]") {
  const auto t = parse("s = \"a\\\"b\\\\c\\nd\"\n");
  CHECK(t.get_string("s") == "a\"b\\c\nd");
}

TEST_CASE("errors carry line numbers and key names", "[toml]") {
  CHECK_THROWS_WITH(parse("a = \n"), Catch::Matchers::ContainsSubstring("line 1"));
  CHECK_THROWS_WITH(parse("a = 1\na = 2\n"),
                    Catch::Matchers::ContainsSubstring("duplicate key 'a'"));
  CHECK_THROWS_WITH(parse("x = {a = 1}\n"),
                    Catch::Matchers::ContainsSubstring("inline tables"));
  CHECK_THROWS_WITH(parse("a 1\n"), Catch::Matchers::ContainsSubstring("expected '='"));
  CHECK_THROWS_WITH(parse("a = [1, 2\n\n"),
                    Catch::Matchers::ContainsSubstring("array"));

  const auto t = parse("a = 1\n");
  CHECK_THROWS_WITH(t.get_string("missing"),
                    Catch::Matchers::ContainsSubstring("missing"));
  CHECK_THROWS_WITH(t.get_string("a"), Catch::Matchers::ContainsSubstring("must be a string"));
}
