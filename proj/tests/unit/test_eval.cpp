#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "tmon/error.hpp"
#include "tmon/eval.hpp"
#include "tmon/vlm.hpp"

using namespace tmon;

namespace {

SectionMap test_map() { return *fixtures::small_camera().sections; }

EntityAnnotation vehicle(std::string id, std::optional<std::string> alias, Direction d) {
  return {std::move(id), EntityKind::kVehicle, {}, {}, std::move(alias), d, false};
}

Frame truth_frame(std::vector<EntityAnnotation> a, bool collision = false) {
  Frame f;
  f.camera_id = "cam-test";
  f.scenario_id = "s";
  f.annotations = std::move(a);
  f.collision_present = collision;
  return f;
}

Mention vm(std::optional<std::string> alias, std::optional<Direction> d) {
  return {EntityKind::kVehicle, true, std::move(alias), d};
}

// Best total field matches over every injective assignment of mentions to
// vehicles, by exhaustive enumeration.
std::pair<std::size_t, std::size_t> brute_force(const std::vector<Mention>& mentions, const Frame& truth) {
  std::vector<const EntityAnnotation*> vehicles;
  for (const auto& a : truth.annotations) {
    if (a.cls == EntityKind::kVehicle) vehicles.push_back(&a);
  }
  const std::size_t n = vehicles.size();
  std::vector<int> slots(std::max(n, mentions.size()));
  std::iota(slots.begin(), slots.end(), 0);
  std::pair<std::size_t, std::size_t> best{0, 0};
  long best_key = -1;
  do {
    std::size_t loc = 0, dir = 0;
    for (std::size_t v = 0; v < n; ++v) {
      const auto m = static_cast<std::size_t>(slots[v]);
      if (m >= mentions.size()) continue;
      loc += mentions[m].located && mentions[m].section_alias == vehicles[v]->section_alias;
      dir += mentions[m].direction == vehicles[v]->direction;
    }
    const long key = static_cast<long>(loc + dir);
    if (key > best_key) {
      best_key = key;
      best = {loc, dir};
    }
  } while (std::next_permutation(slots.begin(), slots.end()));
  return best;
}

}  // namespace

TEST_CASE("strict grammar example") {
  const auto p = parse_response("Vehicle 1 is on the roundabout moving upward. No collision is observed.", test_map());
  CHECK(p.mode == ParseMode::kStrict);
  REQUIRE(p.mentions.size() == 1);
  CHECK(p.mentions[0] == vm("the roundabout", Direction::kUpward));
  CHECK(p.collision_claim == false);
}

TEST_CASE("lenient example") {
  const auto p = parse_response("A car near the roundabout heading up.", test_map());
  CHECK(p.mode == ParseMode::kLenient);
  REQUIRE(p.mentions.size() == 1);
  CHECK(p.mentions[0] == vm("the roundabout", Direction::kUpward));
  CHECK_FALSE(p.collision_claim.has_value());
}

TEST_CASE("lenient parsing details") {
  const SectionMap map = test_map();
  SUBCASE("synonyms and several vehicles") {
    const auto p = parse_response(
        "There is a truck on Section A going towards the upper right, and a car on the roundabout headed left. "
        "Also a parked car on section a.",
        map);
    REQUIRE(p.vehicles().size() == 3);
    CHECK(p.mentions[0] == vm("Section A", Direction::kUpperRight));
    CHECK(p.mentions[1] == vm("the roundabout", Direction::kLeftward));
    CHECK(p.mentions[2] == vm("Section A", Direction::kStationary));
  }
  SUBCASE("collision stems and negation") {
    CHECK(parse_response("Two cars crashed on Section A.", map).collision_claim == true);
    CHECK(parse_response("The vehicles collided.", map).collision_claim == true);
    CHECK(parse_response("There is no collision here.", map).collision_claim == false);
    CHECK(parse_response("Nothing collided and nobody crashed", map).collision_claim == false);
    CHECK(parse_response("The cars didn't crash.", map).collision_claim == false);
    CHECK_FALSE(parse_response("Cars drive around.", map).collision_claim.has_value());
  }
  SUBCASE("off-map and unlocated") {
    const auto p = parse_response("A vehicle off the map moving down. A car moving right.", map);
    REQUIRE(p.mentions.size() == 2);
    CHECK(p.mentions[0] == Mention{EntityKind::kVehicle, true, std::nullopt, Direction::kDownward});
    CHECK(p.mentions[1] == Mention{EntityKind::kVehicle, false, std::nullopt, Direction::kRightward});
  }
  SUBCASE("pedestrians are parsed but not vehicles") {
    const auto p = parse_response("A person walks on Section A. A car sits on the roundabout, stationary.", map);
    REQUIRE(p.mentions.size() == 2);
    CHECK(p.mentions[0].kind == EntityKind::kPedestrian);
    CHECK(p.vehicles().size() == 1);
  }
  SUBCASE("garbage") {
    const auto p = parse_response("lorem ipsum", map);
    CHECK(p.mentions.empty());
    CHECK_FALSE(p.collision_claim.has_value());
  }
}

TEST_CASE("strict grammar rejects unregistered aliases and misnumbered vehicles") {
  const SectionMap map = test_map();
  CHECK_FALSE(parse_strict("Vehicle 1 is on Section Q moving upward. No collision is observed.", map).has_value());
  CHECK_FALSE(parse_strict("Vehicle 2 is on Section A moving upward. No collision is observed.", map).has_value());
  CHECK(parse_strict("Vehicle 1 is stationary off the mapped area. A pedestrian is on Section A. "
                     "A collision has occurred between vehicle 1 and a pedestrian at Section A.",
                     map)
            .has_value());
}

TEST_CASE("strict parse inverts the caption generator under random corruption") {
  const auto cam = fixtures::small_camera();
  std::vector<EntitySpec> specs;
  for (int i = 0; i < 7; ++i) {
    specs.push_back(fixtures::vehicle_spec("v" + std::to_string(i),
                                           {{0.3 + 0.5 * i, 0.2}, {0.3 + 0.5 * i, 2.0}, {3.8, 2.0 + 0.2 * i}}, 0.3 + 0.05 * i));
  }
  specs.push_back(fixtures::pedestrian_spec("p", {{3.9, 3.9}, {0.1, 3.9}}, 0.4));
  auto cfg = fixtures::scenario("sp", 1000, specs);
  const auto run = run_scenario(cfg);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const std::uint32_t tick = static_cast<std::uint32_t>(rng() % 1001);
    const Frame f = rasterize_frame(cam, run[tick], "sp");
    const ErrorRates errors{0.3, 0.3, 0.2};
    const QueryResponse r = oracle_respond({cam.id, tick, "q", nullptr}, f, cam, errors, rng());
    const auto strict = parse_strict(r.raw_text, *cam.sections);
    CAPTURE(r.raw_text);
    REQUIRE(strict.has_value());
    // Identity on the uncorrupted caption.
    const auto clean = parse_strict(caption_frame(f), *cam.sections);
    REQUIRE(clean.has_value());
    CHECK(clean->mentions == expected_parse(f).mentions);
    CHECK(clean->collision_claim == expected_parse(f).collision_claim);
    CHECK(strict->mentions.size() == f.annotations.size());
  }
}

TEST_CASE("score_frame examples") {
  const Frame truth = truth_frame({vehicle("a", "Section A", Direction::kUpward),
                                   vehicle("b", "the roundabout", Direction::kLeftward)});
  ParsedResponse all;
  all.mentions = {vm("Section A", Direction::kUpward), vm("the roundabout", Direction::kLeftward)};
  all.collision_claim = false;
  FrameScore s = score_frame(all, truth);
  CHECK(s.vehicles == 2);
  CHECK(s.location_correct == 2);
  CHECK(s.steering_correct == 2);
  CHECK(s.collision_correct);

  ParsedResponse one_wrong = all;
  one_wrong.mentions[1].section_alias = "Section A";
  s = score_frame(one_wrong, truth);
  CHECK(s.location_correct == 1);
  CHECK(s.steering_correct == 2);

  ParsedResponse silent = all;
  silent.collision_claim.reset();
  CHECK_FALSE(score_frame(silent, truth).collision_correct);
  const Frame crash = truth_frame(truth.annotations, true);
  CHECK_FALSE(score_frame(all, crash).collision_correct);
  ParsedResponse claims = all;
  claims.collision_claim = true;
  CHECK(score_frame(claims, crash).collision_correct);

  ParsedResponse none;
  s = score_frame(none, truth);
  CHECK(s.vehicles == 2);
  CHECK(s.location_correct == 0);
  CHECK(s.mentions == 0);

  ParsedResponse extra = all;
  extra.mentions.push_back(vm("Section A", Direction::kUpward));
  extra.mentions.push_back(vm("Section A", Direction::kUpward));
  s = score_frame(extra, truth);
  CHECK(s.vehicles == 2);
  CHECK(s.location_correct == 2);
  CHECK(s.mentions == 4);
}

TEST_CASE("scores match brute-force assignment and ignore mention order") {
  const std::vector<std::optional<std::string>> aliases = {"Section A", "the roundabout", std::nullopt};
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<EntityAnnotation> truth;
    const std::size_t n = 1 + rng() % 5;
    for (std::size_t i = 0; i < n; ++i) {
      truth.push_back(vehicle("v" + std::to_string(i), aliases[rng() % 3], static_cast<Direction>(rng() % 9)));
    }
    ParsedResponse p;
    const std::size_t m = rng() % 6;
    for (std::size_t i = 0; i < m; ++i) {
      Mention mention = vm(aliases[rng() % 3], static_cast<Direction>(rng() % 9));
      if (rng() % 5 == 0) mention.direction.reset();
      if (rng() % 7 == 0) mention.located = false, mention.section_alias.reset();
      p.mentions.push_back(mention);
    }
    const Frame f = truth_frame(truth);
    const FrameScore s = score_frame(p, f);
    const auto [loc, dir] = brute_force(p.mentions, f);
    CHECK(s.location_correct + s.steering_correct == loc + dir);
    std::shuffle(p.mentions.begin(), p.mentions.end(), rng);
    const FrameScore shuffled = score_frame(p, f);
    CHECK(shuffled.location_correct == s.location_correct);
    CHECK(shuffled.steering_correct == s.steering_correct);
    CHECK(s.location_correct <= s.vehicles);
    CHECK(s.vehicles == n);
  }
}

TEST_CASE("max_weight_assignment on rectangular matrices") {
  CHECK(max_weight_assignment({{1, 5}, {5, 1}}) == std::vector<int>{1, 0});
  CHECK(max_weight_assignment({{3}, {4}, {1}}) == std::vector<int>{-1, 0, -1});
  CHECK(max_weight_assignment({{1, 2, 9}}) == std::vector<int>{2});
  CHECK(max_weight_assignment({}).empty());
}

TEST_CASE("aggregate micro-averages over vehicles and frames") {
  FrameScore a, b;
  a.vehicles = 4;
  a.location_correct = 3;
  a.steering_correct = 4;
  a.collision_correct = true;
  b.vehicles = 2;
  b.location_correct = 1;
  b.steering_correct = 0;
  const EvalReport r = aggregate({a, b});
  CHECK(r.frames_scored == 2);
  CHECK(r.vehicles == 6);
  CHECK(r.location_accuracy == doctest::Approx(4.0 / 6.0));
  CHECK(r.steering_accuracy == doctest::Approx(4.0 / 6.0));
  CHECK(r.collision_accuracy == doctest::Approx(0.5));
  CHECK_THROWS_AS(aggregate({}), ValidationError);

  FrameScore empty;
  empty.collision_correct = true;
  const EvalReport e = aggregate({empty});
  CHECK(e.location_accuracy == 1.0);
  CHECK(e.collision_accuracy == 1.0);
}

TEST_CASE("corrupting one more field never raises any accuracy") {
  const Frame truth = truth_frame({vehicle("a", "Section A", Direction::kUpward),
                                   vehicle("b", "the roundabout", Direction::kLeftward),
                                   vehicle("c", "Section A", Direction::kDownward)});
  ParsedResponse p = expected_parse(truth);
  FrameScore prev = score_frame(p, truth);
  CHECK(prev.location_correct == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    p.mentions[i].section_alias = "nowhere";
    FrameScore next = score_frame(p, truth);
    CHECK(next.location_correct <= prev.location_correct);
    CHECK(next.steering_correct <= prev.steering_correct);
    prev = next;
    p.mentions[i].direction = Direction::kUpperLeft;
    next = score_frame(p, truth);
    CHECK(next.location_correct <= prev.location_correct);
    CHECK(next.steering_correct <= prev.steering_correct);
    prev = next;
  }
  CHECK(prev.location_correct == 0);
  CHECK(prev.steering_correct == 0);
}

TEST_CASE("report JSON round trip") {
  const Frame truth = truth_frame({vehicle("a", "Section A", Direction::kUpward)}, true);
  ParsedResponse p = expected_parse(truth);
  FrameScore s = score_frame(p, truth);
  s.response = "Vehicle 1 is on Section A moving upward.";
  const EvalReport r = aggregate({s, s});
  const EvalReport back = eval_report_from_json(nlohmann::json::parse(to_json(r).dump()));
  CHECK(to_json(back) == to_json(r));
  CHECK(back.frames.size() == 2);
}
