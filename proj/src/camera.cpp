#include "tmon/camera.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "json_util.hpp"
#include "tmon/error.hpp"

namespace tmon {

void validate(const CameraConfig& camera) {
  if (camera.id.empty()) throw ValidationError("id", "must be non-empty");
  if (!(camera.scale > 0.0)) throw ValidationError("scale", "must be > 0");
  if (camera.width <= 0 || camera.height <= 0) throw ValidationError("resolution", "components must be > 0");
  if (camera.capture_period_ticks < 1) throw ValidationError("capture_period_ticks", "must be >= 1");
}

Vec2 project(const CameraConfig& camera, Vec2 world) {
  return {(world.x - camera.origin.x) * camera.scale,
          static_cast<double>(camera.height - 1) - (world.y - camera.origin.y) * camera.scale};
}

Vec2 unproject(const CameraConfig& camera, Vec2 pixel) {
  return {pixel.x / camera.scale + camera.origin.x,
          (static_cast<double>(camera.height - 1) - pixel.y) / camera.scale + camera.origin.y};
}

// ---------------------------------------------------------------- palette

namespace palette {

Rgb static_color(StaticKind kind) {
  switch (kind) {
    case StaticKind::kStopSign: return {200, 16, 16};
    case StaticKind::kYieldSign: return {245, 230, 90};
    case StaticKind::kRoundaboutSign: return {0, 90, 200};
    case StaticKind::kTrafficLight: return {24, 24, 24};
    case StaticKind::kCrosswalk: return kCrosswalkStripe;
    case StaticKind::kTree: return {22, 80, 22};
    case StaticKind::kPole: return {70, 70, 70};
    case StaticKind::kBench: return {120, 72, 30};
  }
  return {0, 0, 0};
}

Rgb light_color(LightColor color) {
  switch (color) {
    case LightColor::kRed: return {255, 40, 40};
    case LightColor::kYellow: return {255, 200, 0};
    case LightColor::kGreen: return {40, 220, 80};
  }
  return {0, 0, 0};
}

Rgb vehicle_color(std::string_view entity_id) {
  static constexpr std::array<Rgb, 8> kBodies{{{230, 126, 34},
                                               {241, 196, 15},
                                               {155, 89, 182},
                                               {26, 188, 156},
                                               {236, 240, 241},
                                               {52, 152, 219},
                                               {211, 84, 0},
                                               {149, 165, 166}}};
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : entity_id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return kBodies[h % kBodies.size()];
}

}  // namespace palette

// ---------------------------------------------------------------- statics

namespace {

constexpr double kSignRadius = 0.05;
constexpr double kTreeRadius = 0.15;
constexpr double kPoleRadius = 0.03;
constexpr double kLampRadius = 0.03;
constexpr OrientedRect kLightBody{{}, 0.04, 0.09, 0.0};
constexpr OrientedRect kBenchBody{{}, 0.12, 0.04, 0.0};
// Crosswalk band: x along the road, y across it.
constexpr double kCrosswalkHalfX = 0.12;
constexpr double kCrosswalkHalfY = 0.30;
constexpr int kCrosswalkStripes = 6;

OrientedRect posed(OrientedRect r, const Pose& p) {
  r.center = {p.x, p.y};
  r.heading = p.heading;
  return r;
}

Polygon rect_polygon(const OrientedRect& r) {
  const auto c = r.corners();
  return {c.begin(), c.end()};
}

}  // namespace

Polygon static_outline(const StaticObjectSpec& s) {
  const Vec2 at{s.pose.x, s.pose.y};
  switch (s.kind) {
    case StaticKind::kStopSign:
    case StaticKind::kYieldSign:
    case StaticKind::kRoundaboutSign: return circle_outline({at, kSignRadius});
    case StaticKind::kTree: return circle_outline({at, kTreeRadius});
    case StaticKind::kPole: return circle_outline({at, kPoleRadius});
    case StaticKind::kTrafficLight: return rect_polygon(posed(kLightBody, s.pose));
    case StaticKind::kBench: return rect_polygon(posed(kBenchBody, s.pose));
    case StaticKind::kCrosswalk:
      return rect_polygon(posed({{}, kCrosswalkHalfX, kCrosswalkHalfY, 0.0}, s.pose));
  }
  return {};
}

// ---------------------------------------------------------------- raster

namespace {

class Canvas {
 public:
  explicit Canvas(Frame& f) : f_(f) {}

  void clear(Rgb c) { kernels::fill_rgb(f_.pixels.data(), f_.pixels.size() / 3, c); }

  // Even-odd scanline fill; pixel x of row y is painted when its center lies
  // in [x_cross_k, x_cross_k+1) for an odd-even crossing pair.
  void fill_polygon(const Polygon& poly, Rgb c) {
    if (poly.size() < 3) return;
    double miny = poly[0].y, maxy = miny;
    for (const Vec2& p : poly) {
      miny = std::min(miny, p.y);
      maxy = std::max(maxy, p.y);
    }
    const int y0 = std::max(0, static_cast<int>(std::ceil(miny)));
    const int y1 = std::min(f_.height - 1, static_cast<int>(std::floor(maxy)));
    std::vector<double> xs;
    for (int y = y0; y <= y1; ++y) {
      const double py = y;
      xs.clear();
      for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[j];
        if ((a.y > py) != (b.y > py)) xs.push_back((b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x);
      }
      std::sort(xs.begin(), xs.end());
      for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
        const int xa = std::max(0, static_cast<int>(std::ceil(xs[k])));
        const int xb = std::min(f_.width, static_cast<int>(std::ceil(xs[k + 1])));
        if (xb > xa) kernels::fill_rgb(f_.row(y) + 3 * xa, static_cast<std::size_t>(xb - xa), c);
      }
    }
  }

  void fill_convex(const Polygon& poly, Rgb c) {
    if (poly.size() < 3) return;
    const double sign = signed_area(poly) >= 0.0 ? 1.0 : -1.0;
    std::vector<kernels::HalfPlane> planes;
    planes.reserve(poly.size());
    double minx = poly[0].x, maxx = minx, miny = poly[0].y, maxy = miny;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2 a = poly[i];
      const Vec2 b = poly[(i + 1) % poly.size()];
      const Vec2 e = b - a;
      // cross(e, p - a) >= 0 on the inner side of a counter-clockwise edge.
      planes.push_back({-e.y * sign, e.x * sign, (e.y * a.x - e.x * a.y) * sign});
      minx = std::min(minx, a.x);
      maxx = std::max(maxx, a.x);
      miny = std::min(miny, a.y);
      maxy = std::max(maxy, a.y);
    }
    const int x0 = std::max(0, static_cast<int>(std::ceil(minx)));
    const int x1 = std::min(f_.width - 1, static_cast<int>(std::floor(maxx)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(miny)));
    const int y1 = std::min(f_.height - 1, static_cast<int>(std::floor(maxy)));
    for (int y = y0; y <= y1 && x0 <= x1; ++y) {
      kernels::fill_convex_span(f_.row(y), y, x0, x1 + 1, planes, c);
    }
  }

  void fill_disc(Vec2 center, double radius, Rgb c) {
    const double r2 = radius * radius;
    const int x0 = std::max(0, static_cast<int>(std::ceil(center.x - radius)));
    const int x1 = std::min(f_.width - 1, static_cast<int>(std::floor(center.x + radius)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(center.y - radius)));
    const int y1 = std::min(f_.height - 1, static_cast<int>(std::floor(center.y + radius)));
    for (int y = y0; y <= y1 && x0 <= x1; ++y) {
      kernels::fill_disc_span(f_.row(y), y, x0, x1 + 1, center.x, center.y, r2, c);
    }
  }

 private:
  Frame& f_;
};

Polygon to_pixels(const CameraConfig& camera, const Polygon& world) {
  Polygon out;
  out.reserve(world.size());
  for (const Vec2& p : world) out.push_back(project(camera, p));
  return out;
}

void draw_static(Canvas& canvas, const CameraConfig& camera, const StaticObjectSpec& s,
                 const std::map<std::string, LightColor>& lights) {
  const Vec2 center = project(camera, {s.pose.x, s.pose.y});
  switch (s.kind) {
    case StaticKind::kStopSign:
    case StaticKind::kYieldSign:
    case StaticKind::kRoundaboutSign:
      canvas.fill_disc(center, kSignRadius * camera.scale, palette::static_color(s.kind));
      break;
    case StaticKind::kTree:
      canvas.fill_disc(center, kTreeRadius * camera.scale, palette::static_color(s.kind));
      break;
    case StaticKind::kPole:
      canvas.fill_disc(center, kPoleRadius * camera.scale, palette::static_color(s.kind));
      break;
    case StaticKind::kTrafficLight: {
      canvas.fill_convex(to_pixels(camera, static_outline(s)), palette::static_color(s.kind));
      const auto it = lights.find(s.light_id);
      const LightColor lamp = it != lights.end() ? it->second : LightColor::kRed;
      canvas.fill_disc(center, kLampRadius * camera.scale, palette::light_color(lamp));
      break;
    }
    case StaticKind::kBench:
      canvas.fill_convex(to_pixels(camera, static_outline(s)), palette::static_color(s.kind));
      break;
    case StaticKind::kCrosswalk: {
      const double pitch = 2.0 * kCrosswalkHalfY / kCrosswalkStripes;
      const Vec2 across{-std::sin(s.pose.heading), std::cos(s.pose.heading)};
      for (int k = 0; k < kCrosswalkStripes; ++k) {
        const double offset = -kCrosswalkHalfY + pitch * (k + 0.5);
        const OrientedRect stripe{Vec2{s.pose.x, s.pose.y} + across * offset, kCrosswalkHalfX,
                                  pitch / 4.0, s.pose.heading};
        canvas.fill_convex(to_pixels(camera, rect_polygon(stripe)), palette::kCrosswalkStripe);
      }
      break;
    }
  }
}

void draw_entity(Canvas& canvas, const CameraConfig& camera, const Entity& e) {
  if (e.kind == EntityKind::kPedestrian) {
    canvas.fill_disc(project(camera, {e.pose.x, e.pose.y}), e.footprint.radius * camera.scale,
                     palette::kPedestrian);
    return;
  }
  const OrientedRect body{{e.pose.x, e.pose.y}, e.footprint.hx, e.footprint.hy, e.pose.heading};
  const Rgb color = palette::vehicle_color(e.id);
  canvas.fill_convex(to_pixels(camera, rect_polygon(body)), color);
  // Darker windshield band across the front quarter marks the heading.
  const Vec2 fwd{std::cos(e.pose.heading), std::sin(e.pose.heading)};
  const OrientedRect nose{body.center + fwd * (0.75 * e.footprint.hx), 0.25 * e.footprint.hx,
                          e.footprint.hy, e.pose.heading};
  canvas.fill_convex(to_pixels(camera, rect_polygon(nose)),
                     Rgb{static_cast<std::uint8_t>(color.r / 2), static_cast<std::uint8_t>(color.g / 2),
                         static_cast<std::uint8_t>(color.b / 2)});
}

std::optional<Polygon> visible_part(const Polygon& px, int width, int height) {
  Polygon clipped = clip_to_box(px, 0.0, 0.0, width - 1.0, height - 1.0);
  if (clipped.size() < 3 || signed_area(clipped) == 0.0) return std::nullopt;
  return clipped;
}

std::optional<std::string> lookup_section(const CameraConfig& camera, Vec2 px) {
  if (!camera.sections) return std::nullopt;
  return section_of(*camera.sections, px);
}

}  // namespace

Frame rasterize_frame(const CameraConfig& camera, const WorldState& state, std::string scenario_id) {
  Frame f;
  f.camera_id = camera.id;
  f.scenario_id = std::move(scenario_id);
  f.tick = state.tick;
  f.width = camera.width;
  f.height = camera.height;
  f.pixels.assign(3 * static_cast<std::size_t>(camera.width) * camera.height, 0);

  Canvas canvas(f);
  canvas.clear(palette::kBackground);
  if (camera.sections) {
    for (const Section& s : camera.sections->sections) canvas.fill_polygon(s.polygon, palette::kRoad);
  }
  for (const StaticObjectSpec& s : state.statics) {
    if (s.kind == StaticKind::kCrosswalk) draw_static(canvas, camera, s, state.light_colors);
  }
  for (const StaticObjectSpec& s : state.statics) {
    if (s.kind != StaticKind::kCrosswalk) draw_static(canvas, camera, s, state.light_colors);
  }
  for (const Entity& e : state.entities) {
    if (e.active && e.kind == EntityKind::kVehicle) draw_entity(canvas, camera, e);
  }
  for (const Entity& e : state.entities) {
    if (e.active && e.kind == EntityKind::kPedestrian) draw_entity(canvas, camera, e);
  }

  std::map<std::string, std::size_t> index_of;
  for (const Entity& e : state.entities) {
    if (!e.active) continue;
    auto mask = visible_part(to_pixels(camera, footprint_outline(e)), f.width, f.height);
    if (!mask) continue;
    EntityAnnotation a;
    a.entity_id = e.id;
    a.cls = e.kind;
    a.bbox = pixel_hull(*mask, f.width, f.height);
    a.mask = std::move(*mask);
    a.section_alias = lookup_section(camera, project(camera, {e.pose.x, e.pose.y}));
    a.direction = heading_label(e.pose.heading, e.speed);
    a.collided = e.collided;
    f.collision_present = f.collision_present || e.collided;
    index_of[e.id] = f.annotations.size();
    f.annotations.push_back(std::move(a));
  }

  for (const StaticObjectSpec& s : state.statics) {
    auto poly = visible_part(to_pixels(camera, static_outline(s)), f.width, f.height);
    if (poly) f.statics.push_back({s.id, s.kind, std::move(*poly)});
  }

  for (const CollisionEvent& ev : state.collisions) {
    const auto ia = index_of.find(ev.a);
    const auto ib = index_of.find(ev.b);
    if (ia == index_of.end() || ib == index_of.end()) continue;
    const Entity* ea = nullptr;
    const Entity* eb = nullptr;
    for (const Entity& e : state.entities) {
      if (e.id == ev.a) ea = &e;
      if (e.id == ev.b) eb = &e;
    }
    const Vec2 mid{(ea->pose.x + eb->pose.x) / 2.0, (ea->pose.y + eb->pose.y) / 2.0};
    auto alias = lookup_section(camera, project(camera, mid));
    if (!alias) alias = f.annotations[ia->second].section_alias;
    f.collisions.push_back({ia->second, ib->second, std::move(alias)});
  }
  return f;
}

std::vector<std::uint32_t> capture_ticks(std::uint32_t duration_ticks, std::uint32_t period) {
  std::vector<std::uint32_t> out;
  if (period == 0) return out;
  for (std::uint64_t t = 0; t <= duration_ticks; t += period) out.push_back(static_cast<std::uint32_t>(t));
  return out;
}

std::vector<Frame> capture_stream(const CameraConfig& camera, const std::vector<WorldState>& run,
                                  const std::string& scenario_id) {
  std::vector<Frame> out;
  if (run.empty()) return out;
  for (std::uint32_t t : capture_ticks(run.back().tick, camera.capture_period_ticks)) {
    out.push_back(rasterize_frame(camera, run.at(t), scenario_id));
  }
  return out;
}

// ---------------------------------------------------------------- PPM

std::string encode_ppm(const Frame& frame) {
  std::string out = "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(frame.pixels.data()), frame.pixels.size());
  return out;
}

Image decode_ppm(std::string_view bytes) {
  std::size_t pos = 0;
  const auto next_token = [&]() -> std::string_view {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  const auto number = [&](std::string_view what) {
    const std::string_view tok = next_token();
    int v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || v <= 0) {
      throw ParseError("PPM: bad " + std::string(what));
    }
    return v;
  };
  if (next_token() != "P6") throw ParseError("PPM: expected P6 magic");
  Image img;
  img.width = number("width");
  img.height = number("height");
  if (number("maxval") != 255) throw ParseError("PPM: only maxval 255 is supported");
  ++pos;  // single whitespace byte before the raster
  const std::size_t need = 3 * static_cast<std::size_t>(img.width) * img.height;
  if (bytes.size() < pos || bytes.size() - pos != need) throw ParseError("PPM: raster size mismatch");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

// ---------------------------------------------------------------- sidecar

namespace {

nlohmann::ordered_json optional_string(const std::optional<std::string>& s) {
  return s ? nlohmann::ordered_json(*s) : nlohmann::ordered_json(nullptr);
}

std::optional<std::string> read_optional_string(const nlohmann::json& j, std::string_view key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

nlohmann::ordered_json annotations_json(const Frame& frame) {
  nlohmann::ordered_json j;
  j["camera_id"] = frame.camera_id;
  j["scenario_id"] = frame.scenario_id;
  j["tick"] = frame.tick;
  j["width"] = frame.width;
  j["height"] = frame.height;
  j["collision_present"] = frame.collision_present;
  auto& anns = j["annotations"] = nlohmann::ordered_json::array();
  for (const auto& a : frame.annotations) {
    anns.push_back({{"entity_id", a.entity_id},
                    {"class", to_string(a.cls)},
                    {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}},
                    {"mask", detail::polygon_json(a.mask)},
                    {"section_alias", optional_string(a.section_alias)},
                    {"direction", to_string(a.direction)},
                    {"collided", a.collided}});
  }
  auto& statics = j["statics"] = nlohmann::ordered_json::array();
  for (const auto& s : frame.statics) {
    statics.push_back({{"id", s.static_id}, {"kind", to_string(s.kind)}, {"polygon", detail::polygon_json(s.polygon)}});
  }
  auto& cols = j["collisions"] = nlohmann::ordered_json::array();
  for (const auto& c : frame.collisions) {
    cols.push_back({{"a", c.a}, {"b", c.b}, {"section_alias", optional_string(c.section_alias)}});
  }
  return j;
}

Frame frame_from_annotations(const nlohmann::json& j) {
  Frame f;
  f.camera_id = detail::field<std::string>(j, "camera_id", "");
  f.scenario_id = detail::field_or<std::string>(j, "scenario_id", "", "");
  f.tick = detail::field<std::uint32_t>(j, "tick", "");
  f.width = detail::field<int>(j, "width", "");
  f.height = detail::field<int>(j, "height", "");
  f.collision_present = detail::field<bool>(j, "collision_present", "");
  const auto& anns = detail::require(j, "annotations", "");
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string at = detail::index_path("annotations", i);
    const auto& aj = anns[i];
    EntityAnnotation a;
    a.entity_id = detail::field<std::string>(aj, "entity_id", at);
    const auto cls = parse_entity_kind(detail::field<std::string>(aj, "class", at));
    if (!cls) throw ParseError(at + ".class: unknown class");
    a.cls = *cls;
    const auto bbox = detail::field<std::vector<int>>(aj, "bbox", at);
    if (bbox.size() != 4) throw ParseError(at + ".bbox: expected [x, y, w, h]");
    a.bbox = {bbox[0], bbox[1], bbox[2], bbox[3]};
    a.mask = detail::as_polygon(detail::require(aj, "mask", at), at + ".mask");
    a.section_alias = read_optional_string(aj, "section_alias");
    const auto dir = parse_direction(detail::field<std::string>(aj, "direction", at));
    if (!dir) throw ParseError(at + ".direction: unknown label");
    a.direction = *dir;
    a.collided = detail::field<bool>(aj, "collided", at);
    f.annotations.push_back(std::move(a));
  }
  if (j.contains("statics")) {
    for (std::size_t i = 0; i < j["statics"].size(); ++i) {
      const std::string at = detail::index_path("statics", i);
      const auto& sj = j["statics"][i];
      const auto kind = parse_static_kind(detail::field<std::string>(sj, "kind", at));
      if (!kind) throw ParseError(at + ".kind: unknown static kind");
      f.statics.push_back({detail::field<std::string>(sj, "id", at), *kind,
                           detail::as_polygon(detail::require(sj, "polygon", at), at + ".polygon")});
    }
  }
  if (j.contains("collisions")) {
    for (const auto& cj : j["collisions"]) {
      f.collisions.push_back({cj.at("a").get<std::size_t>(), cj.at("b").get<std::size_t>(),
                              read_optional_string(cj, "section_alias")});
    }
  }
  return f;
}

std::string frame_stem(const std::string& camera_id, std::uint32_t tick) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08u", tick);
  return camera_id + "/" + buf;
}

}  // namespace tmon
