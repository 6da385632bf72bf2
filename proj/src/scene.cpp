#include "tmon/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "json_util.hpp"
#include "tmon/error.hpp"

namespace tmon {

namespace {

constexpr std::array<std::string_view, 9> kDirectionNames{
    "rightward", "upper-right", "upward", "upper-left", "leftward",
    "lower-left", "downward",    "lower-right", "stationary"};

constexpr std::array<std::string_view, 8> kStaticNames{
    "stop-sign", "yield-sign", "roundabout-sign", "traffic-light",
    "crosswalk", "tree",       "pole",            "bench"};

}  // namespace

std::string_view to_string(EntityKind k) {
  return k == EntityKind::kVehicle ? "vehicle" : "pedestrian";
}

std::string_view to_string(StaticKind k) { return kStaticNames[static_cast<std::size_t>(k)]; }

std::string_view to_string(LightColor c) {
  switch (c) {
    case LightColor::kRed: return "red";
    case LightColor::kYellow: return "yellow";
    case LightColor::kGreen: return "green";
  }
  return "red";
}

std::string_view to_string(Direction d) { return kDirectionNames[static_cast<std::size_t>(d)]; }

std::optional<EntityKind> parse_entity_kind(std::string_view s) {
  if (s == "vehicle") return EntityKind::kVehicle;
  if (s == "pedestrian") return EntityKind::kPedestrian;
  return std::nullopt;
}

std::optional<StaticKind> parse_static_kind(std::string_view s) {
  for (std::size_t i = 0; i < kStaticNames.size(); ++i) {
    if (kStaticNames[i] == s) return static_cast<StaticKind>(i);
  }
  return std::nullopt;
}

std::optional<Direction> parse_direction(std::string_view s) {
  for (std::size_t i = 0; i < kDirectionNames.size(); ++i) {
    if (kDirectionNames[i] == s) return static_cast<Direction>(i);
  }
  return std::nullopt;
}

namespace {

std::optional<LightColor> parse_light_color(std::string_view s) {
  if (s == "red") return LightColor::kRed;
  if (s == "yellow") return LightColor::kYellow;
  if (s == "green") return LightColor::kGreen;
  return std::nullopt;
}

}  // namespace

LightColor LightSchedule::color_at(std::uint32_t tick) const {
  const std::uint64_t cycle = std::uint64_t{green_ticks} + yellow_ticks + red_ticks;
  const std::uint64_t phase = (std::uint64_t{tick} + offset_ticks) % cycle;
  if (phase < green_ticks) return LightColor::kGreen;
  if (phase < std::uint64_t{green_ticks} + yellow_ticks) return LightColor::kYellow;
  return LightColor::kRed;
}

// ---------------------------------------------------------------- validation

void validate(const ScenarioConfig& c) {
  if (c.id.empty()) throw ValidationError("id", "must be non-empty");
  if (c.duration_ticks == 0) throw ValidationError("duration_ticks", "must be > 0");
  if (!(c.tick_dt > 0.0) || !std::isfinite(c.tick_dt)) throw ValidationError("tick_dt", "must be > 0");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < c.entities.size(); ++i) {
    const EntitySpec& e = c.entities[i];
    const std::string at = detail::index_path("entities", i);
    if (e.id.empty()) throw ValidationError(at + ".id", "must be non-empty");
    if (!ids.insert(e.id).second) throw ValidationError(at + ".id", "duplicate entity id '" + e.id + "'");
    if (e.path.empty()) throw ValidationError(at + ".path", "path must have at least one waypoint");
    for (std::size_t k = 0; k < e.path.size(); ++k) {
      if (!std::isfinite(e.path[k].x) || !std::isfinite(e.path[k].y)) {
        throw ValidationError(detail::index_path(at + ".path", k), "non-finite waypoint");
      }
      if (k > 0 && e.path[k] == e.path[k - 1]) {
        throw ValidationError(detail::index_path(at + ".path", k), "zero-length path segment");
      }
    }
    if (!(e.speed >= 0.0) || !std::isfinite(e.speed)) throw ValidationError(at + ".speed", "must be >= 0");
    if (e.kind == EntityKind::kVehicle) {
      if (!(e.footprint.hx > 0.0) || !(e.footprint.hy > 0.0)) {
        throw ValidationError(at + ".footprint", "vehicle half-extents must be > 0");
      }
    } else if (!(e.footprint.radius > 0.0)) {
      throw ValidationError(at + ".footprint", "pedestrian radius must be > 0");
    }
  }

  std::set<std::string> light_ids;
  for (std::size_t i = 0; i < c.lights.size(); ++i) {
    const LightSchedule& l = c.lights[i];
    const std::string at = detail::index_path("lights", i);
    if (l.id.empty()) throw ValidationError(at + ".id", "must be non-empty");
    if (!light_ids.insert(l.id).second) throw ValidationError(at + ".id", "duplicate light id '" + l.id + "'");
    if (l.green_ticks + l.yellow_ticks + l.red_ticks == 0) {
      throw ValidationError(at, "phase durations must sum to > 0");
    }
  }

  std::set<std::string> static_ids;
  for (std::size_t i = 0; i < c.statics.size(); ++i) {
    const StaticObjectSpec& s = c.statics[i];
    const std::string at = detail::index_path("statics", i);
    if (s.id.empty()) throw ValidationError(at + ".id", "must be non-empty");
    if (!static_ids.insert(s.id).second) throw ValidationError(at + ".id", "duplicate static id '" + s.id + "'");
    if (s.kind == StaticKind::kTrafficLight && !light_ids.contains(s.light_id)) {
      throw ValidationError(at + ".light_id", "unknown light '" + s.light_id + "'");
    }
  }
}

// ---------------------------------------------------------------- JSON

namespace {

Footprint parse_footprint(const nlohmann::json& j, const std::string& path) {
  Footprint f;
  f.hx = detail::field_or<double>(j, "hx", path, 0.0);
  f.hy = detail::field_or<double>(j, "hy", path, 0.0);
  f.radius = detail::field_or<double>(j, "radius", path, 0.0);
  return f;
}

Pose parse_pose(const nlohmann::json& j, const std::string& path) {
  return {detail::field<double>(j, "x", path), detail::field<double>(j, "y", path),
          detail::field_or<double>(j, "heading", path, 0.0)};
}

nlohmann::ordered_json footprint_json(EntityKind kind, const Footprint& f) {
  if (kind == EntityKind::kVehicle) return {{"hx", f.hx}, {"hy", f.hy}};
  return {{"radius", f.radius}};
}

nlohmann::ordered_json pose_json(const Pose& p) {
  return {{"x", p.x}, {"y", p.y}, {"heading", p.heading}};
}

nlohmann::ordered_json static_json(const StaticObjectSpec& s) {
  nlohmann::ordered_json j{{"id", s.id}, {"kind", to_string(s.kind)}, {"pose", pose_json(s.pose)}};
  if (!s.light_id.empty()) j["light_id"] = s.light_id;
  return j;
}

StaticObjectSpec parse_static(const nlohmann::json& j, const std::string& at) {
  StaticObjectSpec s;
  s.id = detail::field<std::string>(j, "id", at);
  const auto kind = detail::field<std::string>(j, "kind", at);
  const auto k = parse_static_kind(kind);
  if (!k) throw ParseError(at + ".kind: unknown static kind '" + kind + "'");
  s.kind = *k;
  s.pose = parse_pose(detail::require(j, "pose", at), at + ".pose");
  s.light_id = detail::field_or<std::string>(j, "light_id", at, "");
  return s;
}

}  // namespace

ScenarioConfig parse_scenario(const nlohmann::json& j) {
  ScenarioConfig c;
  c.id = detail::field<std::string>(j, "id", "");
  c.seed = detail::field_or<std::uint32_t>(j, "seed", "", 0);
  c.duration_ticks = detail::field<std::uint32_t>(j, "duration_ticks", "");
  c.tick_dt = detail::field_or<double>(j, "tick_dt", "", kDefaultTickDt);
  c.collision_expected = detail::field_or<bool>(j, "collision_expected", "", false);

  const auto& entities = detail::require(j, "entities", "");
  if (!entities.is_array()) throw ParseError("entities: expected array");
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const std::string at = detail::index_path("entities", i);
    const auto& e = entities[i];
    EntitySpec s;
    s.id = detail::field<std::string>(e, "id", at);
    const auto kind = detail::field<std::string>(e, "kind", at);
    const auto k = parse_entity_kind(kind);
    if (!k) throw ParseError(at + ".kind: unknown entity kind '" + kind + "'");
    s.kind = *k;
    s.footprint = parse_footprint(detail::require(e, "footprint", at), at + ".footprint");
    s.path = detail::as_polygon(detail::require(e, "path", at), at + ".path");
    s.speed = detail::field<double>(e, "speed", at);
    s.spawn_tick = detail::field_or<std::uint32_t>(e, "spawn_tick", at, 0);
    s.heading = detail::field_or<double>(e, "heading", at, 0.0);
    c.entities.push_back(std::move(s));
  }

  if (j.contains("statics")) {
    const auto& statics = j["statics"];
    if (!statics.is_array()) throw ParseError("statics: expected array");
    for (std::size_t i = 0; i < statics.size(); ++i) {
      c.statics.push_back(parse_static(statics[i], detail::index_path("statics", i)));
    }
  }

  if (j.contains("lights")) {
    const auto& lights = j["lights"];
    if (!lights.is_array()) throw ParseError("lights: expected array");
    for (std::size_t i = 0; i < lights.size(); ++i) {
      const std::string at = detail::index_path("lights", i);
      LightSchedule l;
      l.id = detail::field<std::string>(lights[i], "id", at);
      l.green_ticks = detail::field<std::uint32_t>(lights[i], "green_ticks", at);
      l.yellow_ticks = detail::field<std::uint32_t>(lights[i], "yellow_ticks", at);
      l.red_ticks = detail::field<std::uint32_t>(lights[i], "red_ticks", at);
      l.offset_ticks = detail::field_or<std::uint32_t>(lights[i], "offset_ticks", at, 0);
      c.lights.push_back(std::move(l));
    }
  }

  validate(c);
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  try {
    return parse_scenario(detail::read_json_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.filename().string() + ":" + e.field_path(),
                          std::string(e.what()).substr(e.field_path().size() + 2));
  }
}

nlohmann::ordered_json to_json(const ScenarioConfig& c) {
  nlohmann::ordered_json j;
  j["id"] = c.id;
  j["seed"] = c.seed;
  j["duration_ticks"] = c.duration_ticks;
  j["tick_dt"] = c.tick_dt;
  j["collision_expected"] = c.collision_expected;
  auto& entities = j["entities"] = nlohmann::ordered_json::array();
  for (const EntitySpec& e : c.entities) {
    nlohmann::ordered_json ej{{"id", e.id},
                              {"kind", to_string(e.kind)},
                              {"footprint", footprint_json(e.kind, e.footprint)},
                              {"path", detail::polygon_json(e.path)},
                              {"speed", e.speed},
                              {"spawn_tick", e.spawn_tick}};
    if (e.path.size() == 1) ej["heading"] = e.heading;
    entities.push_back(std::move(ej));
  }
  auto& statics = j["statics"] = nlohmann::ordered_json::array();
  for (const StaticObjectSpec& s : c.statics) statics.push_back(static_json(s));
  auto& lights = j["lights"] = nlohmann::ordered_json::array();
  for (const LightSchedule& l : c.lights) {
    lights.push_back({{"id", l.id},
                      {"green_ticks", l.green_ticks},
                      {"yellow_ticks", l.yellow_ticks},
                      {"red_ticks", l.red_ticks},
                      {"offset_ticks", l.offset_ticks}});
  }
  return j;
}

std::vector<ScenarioConfig> load_scenario_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw NotFoundError("scenario directory not found: " + dir.string());
  std::vector<ScenarioConfig> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      out.push_back(load_scenario(entry.path()));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].id == out[i - 1].id) throw ValidationError("id", "duplicate scenario id '" + out[i].id + "'");
  }
  return out;
}

// ---------------------------------------------------------------- motion

namespace {

struct PathPoint {
  Vec2 position;
  double heading;
  bool finished;
};

double path_length(const std::vector<Vec2>& path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) total += length(path[i] - path[i - 1]);
  return total;
}

PathPoint point_along(const EntitySpec& spec, double s) {
  const auto& path = spec.path;
  if (path.size() == 1) return {path[0], normalize_angle(spec.heading), true};
  double start = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec2 seg = path[i + 1] - path[i];
    const double len = length(seg);
    const double heading = normalize_angle(std::atan2(seg.y, seg.x));
    if (s < start + len) {
      const double t = (s - start) / len;
      return {path[i] + seg * t, heading, false};
    }
    start += len;
    if (i + 2 == path.size()) return {path.back(), heading, true};
  }
  return {path.back(), 0.0, true};
}

void place(Entity& e, const EntitySpec& spec, std::uint32_t tick) {
  e.active = tick >= spec.spawn_tick;
  const PathPoint p = point_along(spec, e.travelled);
  e.pose = {p.position.x, p.position.y, p.heading};
  e.speed = (e.active && !e.collided && !p.finished) ? spec.speed : 0.0;
}

}  // namespace

WorldState initial_state(const ScenarioConfig& config) {
  WorldState s;
  s.tick = 0;
  s.statics = config.statics;
  for (const EntitySpec& spec : config.entities) {
    Entity e;
    e.id = spec.id;
    e.kind = spec.kind;
    e.footprint = spec.footprint;
    place(e, spec, 0);
    s.entities.push_back(std::move(e));
  }
  for (const LightSchedule& l : config.lights) s.light_colors[l.id] = l.color_at(0);
  detect_collisions(s);
  return s;
}

WorldState step(const WorldState& state, const ScenarioConfig& config) {
  WorldState next = state;
  next.tick = state.tick + 1;
  for (std::size_t i = 0; i < next.entities.size(); ++i) {
    Entity& e = next.entities[i];
    const EntitySpec& spec = config.entities[i];
    if (e.speed > 0.0) {
      e.travelled = std::min(path_length(spec.path), e.travelled + spec.speed * config.tick_dt);
    }
    place(e, spec, next.tick);
  }
  for (const LightSchedule& l : config.lights) next.light_colors[l.id] = l.color_at(next.tick);
  detect_collisions(next);
  return next;
}

// ---------------------------------------------------------------- collisions

namespace {

OrientedRect rect_of(const Entity& e) {
  return {{e.pose.x, e.pose.y}, e.footprint.hx, e.footprint.hy, e.pose.heading};
}

Circle circle_of(const Entity& e) { return {{e.pose.x, e.pose.y}, e.footprint.radius}; }

bool entities_overlap(const Entity& a, const Entity& b) {
  const bool av = a.kind == EntityKind::kVehicle;
  const bool bv = b.kind == EntityKind::kVehicle;
  if (av && bv) return overlaps(rect_of(a), rect_of(b));
  if (av) return overlaps(circle_of(b), rect_of(a));
  if (bv) return overlaps(circle_of(a), rect_of(b));
  return overlaps(circle_of(a), circle_of(b));
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> overlapping_pairs(const std::vector<Entity>& entities) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (!entities[i].active) continue;
    for (std::size_t j = i + 1; j < entities.size(); ++j) {
      if (entities[j].active && entities_overlap(entities[i], entities[j])) out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> detect_collisions(WorldState& state) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [i, j] : overlapping_pairs(state.entities)) {
    Entity& a = state.entities[i];
    Entity& b = state.entities[j];
    a.collided = true;
    b.collided = true;
    a.speed = 0.0;
    b.speed = 0.0;
    const bool seen = std::any_of(state.collisions.begin(), state.collisions.end(),
                                  [&](const CollisionEvent& ev) { return ev.a == a.id && ev.b == b.id; });
    if (!seen) state.collisions.push_back({a.id, b.id, state.tick});
    out.emplace_back(a.id, b.id);
  }
  return out;
}

// ---------------------------------------------------------------- labels

Direction heading_label(double heading, double speed) {
  if (speed == 0.0) return Direction::kStationary;
  // Bin boundaries sit at odd multiples of 22.5 degrees. Work in units of
  // 22.5 degrees and snap values within rounding noise onto the boundary so
  // that a heading of exactly 67.5 degrees, converted to radians and back,
  // still lands in the upper bin.
  double units = normalize_angle(heading) * (8.0 / kPi);
  const double nearest = std::round(units);
  if (std::fabs(units - nearest) < 1e-9) units = nearest;
  const auto bin = static_cast<int>(std::floor((units + 1.0) / 2.0)) % 8;
  return static_cast<Direction>(bin);
}

Polygon footprint_outline(const Entity& e) {
  if (e.kind == EntityKind::kVehicle) {
    const auto c = rect_of(e).corners();
    return {c.begin(), c.end()};
  }
  return circle_outline(circle_of(e));
}

WorldState state_at(const ScenarioConfig& config, std::uint32_t tick) {
  if (tick > config.duration_ticks) {
    throw ValidationError("tick", std::to_string(tick) + " is past the scenario duration " +
                                      std::to_string(config.duration_ticks));
  }
  WorldState state = initial_state(config);
  while (state.tick < tick) state = step(state, config);
  return state;
}

std::vector<WorldState> run_scenario(const ScenarioConfig& config) {
  std::vector<WorldState> states;
  states.reserve(config.duration_ticks + 1);
  states.push_back(initial_state(config));
  while (states.back().tick < config.duration_ticks) states.push_back(step(states.back(), config));
  return states;
}

// ---------------------------------------------------------------- state JSON

nlohmann::ordered_json to_json(const WorldState& state) {
  nlohmann::ordered_json j;
  j["tick"] = state.tick;
  auto& entities = j["entities"] = nlohmann::ordered_json::array();
  for (const Entity& e : state.entities) {
    entities.push_back({{"id", e.id},
                        {"kind", to_string(e.kind)},
                        {"pose", pose_json(e.pose)},
                        {"speed", e.speed},
                        {"footprint", footprint_json(e.kind, e.footprint)},
                        {"collided", e.collided},
                        {"active", e.active},
                        {"travelled", e.travelled}});
  }
  auto& statics = j["statics"] = nlohmann::ordered_json::array();
  for (const auto& s : state.statics) statics.push_back(static_json(s));
  auto& lights = j["light_colors"] = nlohmann::ordered_json::object();
  for (const auto& [id, color] : state.light_colors) lights[id] = to_string(color);
  auto& collisions = j["collisions"] = nlohmann::ordered_json::array();
  for (const auto& ev : state.collisions) collisions.push_back({{"a", ev.a}, {"b", ev.b}, {"tick", ev.tick}});
  return j;
}

WorldState world_state_from_json(const nlohmann::json& j) {
  WorldState s;
  s.tick = detail::field<std::uint32_t>(j, "tick", "");
  const auto& entities = detail::require(j, "entities", "");
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const std::string at = detail::index_path("entities", i);
    const auto& ej = entities[i];
    Entity e;
    e.id = detail::field<std::string>(ej, "id", at);
    const auto kind = parse_entity_kind(detail::field<std::string>(ej, "kind", at));
    if (!kind) throw ParseError(at + ".kind: unknown entity kind");
    e.kind = *kind;
    e.pose = parse_pose(detail::require(ej, "pose", at), at + ".pose");
    e.speed = detail::field<double>(ej, "speed", at);
    e.footprint = parse_footprint(detail::require(ej, "footprint", at), at + ".footprint");
    e.collided = detail::field<bool>(ej, "collided", at);
    e.active = detail::field<bool>(ej, "active", at);
    e.travelled = detail::field<double>(ej, "travelled", at);
    s.entities.push_back(std::move(e));
  }
  if (j.contains("statics")) {
    for (std::size_t i = 0; i < j["statics"].size(); ++i) {
      s.statics.push_back(parse_static(j["statics"][i], detail::index_path("statics", i)));
    }
  }
  if (j.contains("light_colors")) {
    for (const auto& [id, color] : j["light_colors"].items()) {
      const auto c = parse_light_color(color.get<std::string>());
      if (!c) throw ParseError("light_colors." + id + ": unknown color");
      s.light_colors[id] = *c;
    }
  }
  if (j.contains("collisions")) {
    for (const auto& ev : j["collisions"]) {
      s.collisions.push_back({ev.at("a").get<std::string>(), ev.at("b").get<std::string>(),
                              ev.at("tick").get<std::uint32_t>()});
    }
  }
  return s;
}

}  // namespace tmon
