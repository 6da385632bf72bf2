#pragma once

// Fixed top-down virtual cameras: world-to-pixel projection, deterministic
// rasterization and ground-truth annotation of each frame.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tmon/geometry.hpp"
#include "tmon/grounding.hpp"
#include "tmon/kernels.hpp"
#include "tmon/scene.hpp"

namespace tmon {

struct CameraConfig {
  std::string id;
  Vec2 origin;          // world meters mapped to the bottom-left pixel
  double scale = 1.0;   // pixels per meter
  int width = 1024;
  int height = 1024;
  std::uint32_t capture_period_ticks = 1;
  std::shared_ptr<const SectionMap> sections;
  std::shared_ptr<const AliasTable> aliases;
};

// Throws ValidationError on scale <= 0, empty resolution or zero period.
void validate(const CameraConfig& camera);

// World +y maps to image-up. Results may fall outside the frame.
Vec2 project(const CameraConfig& camera, Vec2 world);
Vec2 unproject(const CameraConfig& camera, Vec2 pixel);

struct EntityAnnotation {
  std::string entity_id;
  EntityKind cls = EntityKind::kVehicle;
  BBox bbox;
  Polygon mask;  // projected footprint clipped to the frame
  std::optional<std::string> section_alias;
  Direction direction = Direction::kStationary;
  bool collided = false;
};

// Static props visible in the frame, kept for highlighting and as detector
// distractors.
struct StaticAnnotation {
  std::string static_id;
  StaticKind kind = StaticKind::kPole;
  Polygon polygon;
};

// A recorded collision whose members are both on screen. Indices refer to
// Frame::annotations.
struct CollisionAnnotation {
  std::size_t a = 0;
  std::size_t b = 0;
  std::optional<std::string> section_alias;
};

struct Frame {
  std::string camera_id;
  std::string scenario_id;
  std::uint32_t tick = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB8
  std::vector<EntityAnnotation> annotations;
  std::vector<StaticAnnotation> statics;
  std::vector<CollisionAnnotation> collisions;
  bool collision_present = false;

  std::uint8_t* row(int y) { return pixels.data() + 3 * static_cast<std::size_t>(y) * width; }
  const std::uint8_t* row(int y) const { return pixels.data() + 3 * static_cast<std::size_t>(y) * width; }
  Rgb pixel(int x, int y) const {
    const std::uint8_t* p = row(y) + 3 * x;
    return {p[0], p[1], p[2]};
  }
};

namespace palette {
inline constexpr Rgb kBackground{58, 110, 52};
inline constexpr Rgb kRoad{96, 96, 96};
inline constexpr Rgb kCrosswalkStripe{235, 235, 235};
inline constexpr Rgb kPedestrian{30, 60, 200};
Rgb static_color(StaticKind kind);
Rgb light_color(LightColor color);
Rgb vehicle_color(std::string_view entity_id);
}  // namespace palette

// Footprint of a static prop in world meters.
Polygon static_outline(const StaticObjectSpec& s);

Frame rasterize_frame(const CameraConfig& camera, const WorldState& state,
                      std::string scenario_id = {});

// Ticks at which a camera captures: 0, p, 2p, ... <= duration.
std::vector<std::uint32_t> capture_ticks(std::uint32_t duration_ticks, std::uint32_t period);

// One frame per capture tick of a scenario run (states indexed by tick).
std::vector<Frame> capture_stream(const CameraConfig& camera, const std::vector<WorldState>& run,
                                  const std::string& scenario_id = {});

// Binary PPM (P6, maxval 255).
std::string encode_ppm(const Frame& frame);
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};
Image decode_ppm(std::string_view bytes);

// Sidecar annotation document.
nlohmann::ordered_json annotations_json(const Frame& frame);
// Restores a frame's annotations (pixels are left empty).
Frame frame_from_annotations(const nlohmann::json& j);

// "{camera_id}/{tick:08}" without extension.
std::string frame_stem(const std::string& camera_id, std::uint32_t tick);

}  // namespace tmon
