#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "tmon/error.hpp"
#include "tmon/scene.hpp"

using namespace tmon;
using fixtures::pedestrian_spec;
using fixtures::scenario;
using fixtures::vehicle_spec;

TEST_CASE("light schedule cycles green, yellow, red with offset") {
  const LightSchedule l{"l", 3, 1, 2, 0};
  const LightColor expected[] = {LightColor::kGreen, LightColor::kGreen, LightColor::kGreen,
                                 LightColor::kYellow, LightColor::kRed, LightColor::kRed};
  for (std::uint32_t t = 0; t < 18; ++t) CHECK(l.color_at(t) == expected[t % 6]);
  const LightSchedule shifted{"l", 3, 1, 2, 4};
  for (std::uint32_t t = 0; t < 18; ++t) CHECK(shifted.color_at(t) == expected[(t + 4) % 6]);
}

TEST_CASE("heading label sweep over tenths of a degree") {
  // Bin k covers [45k - 22.5, 45k + 22.5) degrees.
  for (int d = 0; d < 3600; ++d) {
    const int bin = ((d + 225) / 450) % 8;
    const double radians = d * kPi / 1800.0;
    CAPTURE(d);
    CHECK(heading_label(radians, 1.0) == static_cast<Direction>(bin));
    CHECK(heading_label(radians - kTwoPi, 1.0) == static_cast<Direction>(bin));
  }
  CHECK(heading_label(1.0, 0.0) == Direction::kStationary);
  CHECK(to_string(Direction::kUpperRight) == "upper-right");
  CHECK(parse_direction("lower-left") == Direction::kLowerLeft);
  CHECK_FALSE(parse_direction("sideways").has_value());
}

TEST_CASE("vehicles follow their path at constant speed and stop at the end") {
  // 1 m/s, dt 0.005: 200 ticks per meter.
  auto cfg = scenario("t", 700, {vehicle_spec("v", {{0, 0}, {1, 0}, {1, 2}}, 1.0)});
  const auto states = run_scenario(cfg);
  REQUIRE(states.size() == 701);
  CHECK(states[0].entities[0].pose == Pose{0, 0, 0});
  CHECK(states[100].entities[0].pose.x == doctest::Approx(0.5));
  CHECK(states[300].entities[0].pose.x == doctest::Approx(1.0));
  CHECK(states[300].entities[0].pose.y == doctest::Approx(0.5));
  CHECK(states[300].entities[0].pose.heading == doctest::Approx(kPi / 2));
  CHECK(heading_label(states[300].entities[0].pose.heading, states[300].entities[0].speed) ==
        Direction::kUpward);
  const Entity& end = states[700].entities[0];
  CHECK(end.pose.x == doctest::Approx(1.0));
  CHECK(end.pose.y == doctest::Approx(2.0));
  CHECK(end.speed == 0.0);
  CHECK(end.travelled == doctest::Approx(3.0));
  CHECK(end.pose.heading == doctest::Approx(kPi / 2));
}

TEST_CASE("spawn tick holds the entity inactive at its first waypoint") {
  auto v = vehicle_spec("v", {{0, 0}, {1, 0}}, 1.0);
  v.spawn_tick = 10;
  auto cfg = scenario("t", 20, {v});
  const auto states = run_scenario(cfg);
  CHECK_FALSE(states[9].entities[0].active);
  CHECK(states[9].entities[0].speed == 0.0);
  CHECK(states[10].entities[0].active);
  CHECK(states[10].entities[0].pose.x == 0.0);
  CHECK(states[11].entities[0].pose.x == doctest::Approx(0.005));
}

TEST_CASE("single-waypoint entities are parked with their declared heading") {
  auto cfg = scenario("t", 5, {vehicle_spec("p", {{2, 2}}, 0.0, kPi)});
  const auto s = state_at(cfg, 5);
  CHECK(s.entities[0].pose == Pose{2, 2, kPi});
  CHECK(heading_label(s.entities[0].pose.heading, s.entities[0].speed) == Direction::kStationary);
}

TEST_CASE("head-on vehicles collide once and stay stopped") {
  // Fronts start 0.5825 m apart and close 0.01 m per tick: first overlap at tick 59.
  auto cfg = scenario("t", 200, {vehicle_spec("a", {{0, 0}, {3, 0}}, 1.0),
                                 vehicle_spec("b", {{1.0025, 0}, {-2, 0}}, 1.0)});
  const auto states = run_scenario(cfg);
  std::uint32_t first = 0;
  for (const auto& s : states) {
    if (!s.collisions.empty()) {
      first = s.tick;
      break;
    }
  }
  CHECK(first == 59);
  const WorldState& last = states.back();
  REQUIRE(last.collisions.size() == 1);
  CHECK(last.collisions[0] == CollisionEvent{"a", "b", 59});
  CHECK(last.entities[0].collided);
  CHECK(last.entities[1].collided);
  CHECK(last.entities[0].pose == states[59].entities[0].pose);
  CHECK(last.entities[0].speed == 0.0);
}

TEST_CASE("pedestrian crossing a parked vehicle") {
  auto cfg = scenario("t", 400, {vehicle_spec("car", {{1, 1}}, 0.0),
                                 pedestrian_spec("ped", {{1, 0.0025}, {1, 2}}, 1.0)});
  const auto last = state_at(cfg, 400);
  REQUIRE(last.collisions.size() == 1);
  CHECK(last.collisions[0].a == "car");
  CHECK(last.collisions[0].b == "ped");
  // Needs y > 0.84, i.e. more than 0.8375 m travelled.
  CHECK(last.collisions[0].tick == 168);
}

TEST_CASE("separated traffic never collides") {
  auto cfg = scenario("t", 300, {vehicle_spec("a", {{0, 0}, {3, 0}}, 1.0),
                                 vehicle_spec("b", {{0, 0.5}, {3, 0.5}}, 1.0),
                                 pedestrian_spec("p", {{0, 1}, {3, 1}}, 1.0)});
  CHECK(state_at(cfg, 300).collisions.empty());
}

TEST_CASE("inactive entities are ignored by collision detection") {
  auto a = vehicle_spec("a", {{0, 0}}, 0.0);
  auto b = vehicle_spec("b", {{0, 0}, {1, 0}}, 1.0);
  b.spawn_tick = 5;
  auto cfg = scenario("t", 10, {a, b});
  const auto states = run_scenario(cfg);
  CHECK(states[4].collisions.empty());
  REQUIRE(states[5].collisions.size() == 1);
  CHECK(states[5].collisions[0].tick == 5);
}

TEST_CASE("validation names the offending field") {
  auto check_field = [](ScenarioConfig cfg, const std::string& field) {
    try {
      validate(cfg);
      FAIL("expected ValidationError for " << field);
    } catch (const ValidationError& e) {
      CHECK(e.field_path() == field);
    }
  };
  check_field(scenario("", 10, {}), "id");
  check_field(scenario("t", 0, {}), "duration_ticks");
  check_field(scenario("t", 10, {vehicle_spec("a", {}, 1.0)}), "entities[0].path");
  check_field(scenario("t", 10, {vehicle_spec("a", {{0, 0}, {0, 0}}, 1.0)}), "entities[0].path[1]");
  check_field(scenario("t", 10, {vehicle_spec("a", {{0, 0}}, -1.0)}), "entities[0].speed");
  check_field(scenario("t", 10, {vehicle_spec("a", {{0, 0}}, 0), vehicle_spec("a", {{1, 0}}, 0)}),
              "entities[1].id");
  auto p = pedestrian_spec("p", {{0, 0}}, 0);
  p.footprint.radius = 0;
  check_field(scenario("t", 10, {p}), "entities[0].footprint");
  auto light = scenario("t", 10, {});
  light.statics.push_back({"tl", StaticKind::kTrafficLight, {}, "missing"});
  check_field(light, "statics[0].light_id");
}

TEST_CASE("parse errors for malformed scenario JSON") {
  using nlohmann::json;
  CHECK_THROWS_AS(parse_scenario(json::parse(R"({"duration_ticks": 5, "entities": []})")), ParseError);
  CHECK_THROWS_AS(parse_scenario(json::parse(R"({"id": "x", "duration_ticks": "five", "entities": []})")),
                  ParseError);
  CHECK_THROWS_AS(parse_scenario(json::parse(
                      R"({"id": "x", "duration_ticks": 5, "entities": [{"id": "a", "kind": "bus",
                          "footprint": {}, "path": [[0,0]], "speed": 0}]})")),
                  ParseError);
  CHECK_THROWS_AS(parse_scenario(json::parse(R"({"id": "x", "duration_ticks": 5, "entities": {}})")),
                  ParseError);
  CHECK_THROWS_AS(load_scenario(fixtures::temp_dir("scene") / "nope.json"), Error);
}

TEST_CASE("scenario JSON round trip") {
  auto cfg = scenario("rt", 50, {vehicle_spec("a", {{0, 0}, {1, 0.5}}, 0.3),
                                 pedestrian_spec("p", {{2, 2}, {2, 3}}, 0.2)});
  cfg.seed = 9;
  cfg.collision_expected = true;
  cfg.lights.push_back({"l1", 10, 2, 8, 3});
  cfg.statics.push_back({"tl", StaticKind::kTrafficLight, {1, 2, 0.5}, "l1"});
  cfg.statics.push_back({"tree", StaticKind::kTree, {3, 3, 0}, ""});
  const ScenarioConfig back = parse_scenario(nlohmann::json::parse(to_json(cfg).dump()));
  CHECK(to_json(back) == to_json(cfg));
  CHECK(run_scenario(back) == run_scenario(cfg));
}

TEST_CASE("world state JSON round trip") {
  auto cfg = scenario("rt", 200, {vehicle_spec("a", {{0, 0}, {3, 0}}, 1.0),
                                  vehicle_spec("b", {{1.0, 0}, {-2, 0}}, 1.0)});
  cfg.lights.push_back({"l1", 10, 2, 8, 0});
  const WorldState s = state_at(cfg, 120);
  REQUIRE_FALSE(s.collisions.empty());
  CHECK(world_state_from_json(nlohmann::json::parse(to_json(s).dump())) == s);
}

TEST_CASE("state_at matches run_scenario and rejects ticks past the end") {
  auto cfg = scenario("t", 40, {vehicle_spec("a", {{0, 0}, {3, 0}}, 1.0)});
  const auto states = run_scenario(cfg);
  for (std::uint32_t t : {0u, 1u, 17u, 40u}) CHECK(state_at(cfg, t) == states[t]);
  CHECK_THROWS_AS(state_at(cfg, 41), ValidationError);
}

TEST_CASE("demo scenarios load and respect their collision flags") {
  const auto all = load_scenario_dir(fixtures::scenario_dir());
  REQUIRE(all.size() == 30);
  CHECK(all.front().id == "s01");
  CHECK(all.back().id == "s30");
  int flagged = 0;
  for (const auto& cfg : {all[0], all[2], all[6]}) {
    const WorldState last = state_at(cfg, cfg.duration_ticks);
    CHECK(last.collisions.empty() != cfg.collision_expected);
  }
  for (const auto& cfg : all) flagged += cfg.collision_expected;
  CHECK(flagged == 7);
}
