#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "tmon/camera.hpp"
#include "tmon/codec.hpp"
#include "tmon/error.hpp"

using namespace tmon;
using fixtures::small_camera;

TEST_CASE("projection maps world +y to image-up") {
  CameraConfig c;
  c.id = "c";
  c.scale = 10.0;
  c.width = 256;
  c.height = 256;
  const Vec2 p = project(c, {1, 1});
  CHECK(p.x == 10.0);
  CHECK(p.y == 245.0);
  c.origin = {2, 3};
  const Vec2 q = project(c, {2, 3});
  CHECK(q.x == 0.0);
  CHECK(q.y == 255.0);
}

TEST_CASE("project and unproject round trip within half a pixel") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> w(-20, 20), s(1, 500);
  for (int i = 0; i < 2000; ++i) {
    CameraConfig c;
    c.id = "c";
    c.origin = {w(rng), w(rng)};
    c.scale = s(rng);
    c.height = 1 + static_cast<int>(rng() % 2048);
    const Vec2 world{w(rng), w(rng)};
    const Vec2 px = project(c, world);
    const Vec2 snapped{std::round(px.x), std::round(px.y)};
    const Vec2 back = project(c, unproject(c, snapped));
    CHECK(std::abs(back.x - px.x) <= 0.5 + 1e-9);
    CHECK(std::abs(back.y - px.y) <= 0.5 + 1e-9);
    const Vec2 exact = unproject(c, px);
    CHECK(exact.x == doctest::Approx(world.x));
    CHECK(exact.y == doctest::Approx(world.y));
  }
}

TEST_CASE("camera validation") {
  CameraConfig c = small_camera();
  CHECK_NOTHROW(validate(c));
  c.scale = 0;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = small_camera();
  c.width = 0;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = small_camera();
  c.capture_period_ticks = 0;
  CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("capture ticks") {
  CHECK(capture_ticks(100, 10).size() == 11);
  CHECK(capture_ticks(100, 10).back() == 100);
  CHECK(capture_ticks(99, 10).back() == 90);
  CHECK(capture_ticks(5, 1).size() == 6);
  CHECK(capture_ticks(0, 7) == std::vector<std::uint32_t>{0});
}

TEST_CASE("capture_stream emits one frame per capture tick") {
  auto cfg = fixtures::scenario("t", 100, {fixtures::vehicle_spec("v", {{0.5, 2}, {3.5, 2}}, 0.5)});
  const auto frames = capture_stream(small_camera(10), run_scenario(cfg), "t");
  REQUIRE(frames.size() == 11);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK(frames[i].tick == 10 * i);
    CHECK(frames[i].scenario_id == "t");
  }
}

TEST_CASE("empty world renders roads over background with no annotations") {
  const auto cam = small_camera();
  const Frame f = rasterize_frame(cam, initial_state(fixtures::scenario("t", 1, {})));
  CHECK(f.annotations.empty());
  CHECK(f.statics.empty());
  CHECK_FALSE(f.collision_present);
  CHECK(f.pixels.size() == 3u * 256 * 256);
  for (int y = 0; y < 256; y += 17) {
    for (int x = 0; x < 256; x += 13) CHECK(f.pixel(x, y) == palette::kRoad);
  }
  CameraConfig bare = cam;
  bare.sections.reset();
  const Frame g = rasterize_frame(bare, initial_state(fixtures::scenario("t", 1, {})));
  CHECK(g.pixel(100, 100) == palette::kBackground);
}

TEST_CASE("one vehicle annotation") {
  const auto cam = small_camera();
  // Center (1, 2) m -> pixel (64, 127); 0.42 x 0.2 m -> 26.88 x 12.8 px.
  auto cfg = fixtures::scenario("t", 10, {fixtures::vehicle_spec("v", {{1, 2}, {3, 2}}, 1.0)});
  const Frame f = rasterize_frame(cam, initial_state(cfg));
  REQUIRE(f.annotations.size() == 1);
  const EntityAnnotation& a = f.annotations[0];
  CHECK(a.entity_id == "v");
  CHECK(a.cls == EntityKind::kVehicle);
  CHECK(a.bbox == BBox{50, 120, 29, 15});
  CHECK(a.section_alias == std::optional<std::string>("Section A"));
  CHECK(a.direction == Direction::kRightward);
  CHECK_FALSE(a.collided);
  CHECK(f.pixel(64, 127) == palette::vehicle_color("v"));
  CHECK(f.pixel(64, 110) == palette::kRoad);
}

TEST_CASE("partially visible entities are clipped, fully hidden ones dropped") {
  const auto cam = small_camera();
  auto cfg = fixtures::scenario("t", 1, {fixtures::vehicle_spec("edge", {{0, 2}}, 0.0),
                                         fixtures::vehicle_spec("gone", {{-5, 2}}, 0.0)});
  const Frame f = rasterize_frame(cam, initial_state(cfg));
  REQUIRE(f.annotations.size() == 1);
  CHECK(f.annotations[0].entity_id == "edge");
  CHECK(f.annotations[0].bbox.x == 0);
  for (const Vec2& p : f.annotations[0].mask) CHECK(p.x >= 0.0);
}

TEST_CASE("collision annotation carries the midpoint section") {
  const auto cam = small_camera();
  auto cfg = fixtures::scenario("t", 100, {fixtures::vehicle_spec("a", {{2.2, 2}}, 0.0, kPi / 2),
                                           fixtures::vehicle_spec("b", {{2.05, 2}}, 0.0, kPi / 2)});
  const Frame f = rasterize_frame(cam, initial_state(cfg));
  CHECK(f.collision_present);
  REQUIRE(f.collisions.size() == 1);
  CHECK(f.collisions[0].section_alias == std::optional<std::string>("the roundabout"));
  CHECK(f.annotations[0].collided);
}

TEST_CASE("PPM encode and decode round trip") {
  auto cfg = fixtures::scenario("t", 10, {fixtures::vehicle_spec("v", {{1, 2}, {3, 2}}, 1.0)});
  const Frame f = rasterize_frame(small_camera(), initial_state(cfg));
  const std::string ppm = encode_ppm(f);
  CHECK(ppm.rfind("P6\n256 256\n255\n", 0) == 0);
  const Image img = decode_ppm(ppm);
  CHECK(img.width == 256);
  CHECK(img.height == 256);
  CHECK(img.pixels == f.pixels);
  CHECK_THROWS_AS(decode_ppm("P3\n1 1\n255\n0 0 0"), ParseError);
  CHECK_THROWS_AS(decode_ppm(ppm.substr(0, ppm.size() - 1)), ParseError);
}

TEST_CASE("annotation sidecar round trip") {
  auto cfg = fixtures::scenario("t", 10, {fixtures::vehicle_spec("v", {{1, 2}, {3, 2}}, 1.0),
                                          fixtures::pedestrian_spec("p", {{3, 3}, {3, 1}}, 0.5)});
  const Frame f = rasterize_frame(small_camera(), state_at(cfg, 5), "t");
  const Frame back = frame_from_annotations(nlohmann::json::parse(annotations_json(f).dump()));
  CHECK(annotations_json(back) == annotations_json(f));
  CHECK(back.tick == 5);
  CHECK(back.pixels.empty());
  CHECK(frame_stem("cam-nw", 42) == "cam-nw/00000042");
}

TEST_CASE("rendering is deterministic and matches the golden digest") {
  auto cfg = fixtures::scenario("t", 50, {fixtures::vehicle_spec("v", {{0.5, 0.5}, {3.5, 3.5}}, 1.0),
                                          fixtures::pedestrian_spec("p", {{3, 3.5}, {3, 0.5}}, 0.5)});
  cfg.lights.push_back({"l", 10, 5, 10, 0});
  cfg.statics.push_back({"cw", StaticKind::kCrosswalk, {2, 1, 0}, ""});
  cfg.statics.push_back({"tl", StaticKind::kTrafficLight, {3.6, 3.6, 0}, "l"});
  cfg.statics.push_back({"tree", StaticKind::kTree, {0.4, 3.5, 0}, ""});
  cfg.statics.push_back({"stop", StaticKind::kStopSign, {1.5, 3.5, 0}, ""});
  const Frame f = rasterize_frame(small_camera(), state_at(cfg, 40), "t");
  const std::string ppm = encode_ppm(f);
  CHECK(encode_ppm(rasterize_frame(small_camera(), state_at(cfg, 40), "t")) == ppm);
  CHECK(sha256_hex(ppm) == "8a271af63352f2b073083fe45f2ab462812ec707dd3562a9445c24e023599f91");
}

TEST_CASE("base64 and sha256 known answers") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
  CHECK(base64_decode("Zm9vYmE=") == "fooba");
  CHECK_THROWS_AS(base64_decode("Zm9$"), ParseError);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
