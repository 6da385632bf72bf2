#pragma once

// Deterministic discrete-time traffic world: scripted waypoint motion,
// static props, light schedules and geometric collision events.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tmon/geometry.hpp"

namespace tmon {

inline constexpr double kDefaultTickDt = 0.005;  // seconds

enum class EntityKind { kVehicle, kPedestrian };

enum class StaticKind {
  kStopSign,
  kYieldSign,
  kRoundaboutSign,
  kTrafficLight,
  kCrosswalk,
  kTree,
  kPole,
  kBench,
};

enum class LightColor { kRed, kYellow, kGreen };

// Quantized heading in image space (world +y is image-up).
enum class Direction {
  kRightward,
  kUpperRight,
  kUpward,
  kUpperLeft,
  kLeftward,
  kLowerLeft,
  kDownward,
  kLowerRight,
  kStationary,
};

std::string_view to_string(EntityKind k);
std::string_view to_string(StaticKind k);
std::string_view to_string(LightColor c);
std::string_view to_string(Direction d);
std::optional<EntityKind> parse_entity_kind(std::string_view s);
std::optional<StaticKind> parse_static_kind(std::string_view s);
std::optional<Direction> parse_direction(std::string_view s);

// Vehicles use the half-extents (hx along the heading), pedestrians the radius.
struct Footprint {
  double hx = 0.0;
  double hy = 0.0;
  double radius = 0.0;

  friend bool operator==(const Footprint&, const Footprint&) = default;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

struct EntitySpec {
  std::string id;
  EntityKind kind = EntityKind::kVehicle;
  Footprint footprint;
  std::vector<Vec2> path;  // world meters, at least one waypoint
  double speed = 0.0;      // m/s
  std::uint32_t spawn_tick = 0;
  double heading = 0.0;  // used only when the path has a single waypoint
};

struct StaticObjectSpec {
  std::string id;
  StaticKind kind = StaticKind::kPole;
  Pose pose;
  std::string light_id;  // traffic lights only

  friend bool operator==(const StaticObjectSpec&, const StaticObjectSpec&) = default;
};

// Cycles green -> yellow -> red; `offset_ticks` shifts the cycle start.
struct LightSchedule {
  std::string id;
  std::uint32_t green_ticks = 1;
  std::uint32_t yellow_ticks = 1;
  std::uint32_t red_ticks = 1;
  std::uint32_t offset_ticks = 0;

  LightColor color_at(std::uint32_t tick) const;
};

struct ScenarioConfig {
  std::string id;
  std::uint32_t seed = 0;
  std::uint32_t duration_ticks = 1;
  double tick_dt = kDefaultTickDt;
  std::vector<EntitySpec> entities;
  std::vector<StaticObjectSpec> statics;
  std::vector<LightSchedule> lights;
  bool collision_expected = false;
};

struct Entity {
  std::string id;
  EntityKind kind = EntityKind::kVehicle;
  Pose pose;
  double speed = 0.0;  // current, 0 when parked, finished, collided or not yet spawned
  Footprint footprint;
  bool collided = false;
  bool active = false;     // spawned
  double travelled = 0.0;  // arc length along the path

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct CollisionEvent {
  std::string a;
  std::string b;
  std::uint32_t tick = 0;

  friend bool operator==(const CollisionEvent&, const CollisionEvent&) = default;
};

struct WorldState {
  std::uint32_t tick = 0;
  std::vector<Entity> entities;
  std::vector<StaticObjectSpec> statics;
  std::map<std::string, LightColor> light_colors;
  // First-contact log, one entry per unordered pair, in detection order.
  std::vector<CollisionEvent> collisions;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

// Throws ValidationError naming the offending field.
void validate(const ScenarioConfig& config);

// Throws ParseError on malformed JSON or schema mismatches, ValidationError on
// invariant violations.
ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const ScenarioConfig& config);

// All *.json scenario files in a directory, sorted by id.
std::vector<ScenarioConfig> load_scenario_dir(const std::filesystem::path& dir);

WorldState initial_state(const ScenarioConfig& config);

// Advances one tick: motion, light colors, then collision detection.
// Precondition: state.tick < config.duration_ticks.
WorldState step(const WorldState& state, const ScenarioConfig& config);

// Marks every overlapping unordered pair as collided (sticky) and appends
// first contacts to state.collisions. Returns all currently overlapping pairs
// as (earlier, later) in entity-list order.
std::vector<std::pair<std::string, std::string>> detect_collisions(WorldState& state);

// Pure pair enumeration used by detect_collisions.
std::vector<std::pair<std::size_t, std::size_t>> overlapping_pairs(
    const std::vector<Entity>& entities);

Direction heading_label(double heading, double speed);

// World-frame outline of an entity footprint.
Polygon footprint_outline(const Entity& e);

// Every state from tick 0 through duration_ticks.
std::vector<WorldState> run_scenario(const ScenarioConfig& config);

// State after `tick` steps. Throws ValidationError past the duration.
WorldState state_at(const ScenarioConfig& config, std::uint32_t tick);

nlohmann::ordered_json to_json(const WorldState& state);
WorldState world_state_from_json(const nlohmann::json& j);

}  // namespace tmon
