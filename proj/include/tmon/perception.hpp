#pragma once

// Instance masks for dynamic objects (ground-truth oracle or a remote
// segmentation service), highlight overlays, and detector quality metrics.

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tmon/camera.hpp"
#include "tmon/remote.hpp"

namespace tmon {

enum class DetectionClass { kVehicle, kPerson };

std::string_view to_string(DetectionClass c);

struct Detection {
  DetectionClass cls = DetectionClass::kVehicle;
  double confidence = 1.0;  // [0, 1]
  BBox bbox;
  Polygon mask;  // pixels, clipped to the frame
};

enum class HighlightKind { kTrafficSign, kTrafficLight, kCrosswalk, kRoad };

std::string_view to_string(HighlightKind k);

struct StaticHighlightRegion {
  std::string camera_id;
  HighlightKind kind = HighlightKind::kRoad;
  Polygon polygon;
  Rgb color;
};

namespace highlight {
inline constexpr Rgb kVehicle{255, 0, 0};
inline constexpr Rgb kPerson{255, 255, 0};
Rgb region_color(HighlightKind kind);
}  // namespace highlight

// ---------------------------------------------------------------- detectors

// Seeded corruption knobs for exercising the evaluation harness.
// drop_rate: each annotation is dropped with this probability.
// mislabel_rate: each visible tree/pole/bench is reported as a vehicle or
// person with this probability.
struct OracleCorruption {
  double drop_rate = 0.0;
  double mislabel_rate = 0.0;
  std::uint64_t seed = 0;
};

std::vector<Detection> oracle_detect(const Frame& frame, const OracleCorruption& corruption = {});

// Request body for POST /v1/detect.
nlohmann::ordered_json detect_request(const Frame& frame);

// Validates a /v1/detect reply and clips geometry to the frame. Throws
// MalformedResponseError naming `endpoint` on any invariant violation.
std::vector<Detection> parse_detect_response(std::string_view body, int width, int height,
                                             const std::string& endpoint);

std::vector<Detection> remote_detect(const Frame& frame, const std::string& endpoint,
                                     std::chrono::milliseconds timeout);

nlohmann::ordered_json to_json(const std::vector<Detection>& detections);

class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<Detection> detect(const Frame& frame) = 0;
};

class OracleDetector final : public Detector {
 public:
  explicit OracleDetector(OracleCorruption corruption = {}) : corruption_(corruption) {}
  std::vector<Detection> detect(const Frame& frame) override { return oracle_detect(frame, corruption_); }

 private:
  OracleCorruption corruption_;
};

class RemoteDetector final : public Detector {
 public:
  RemoteDetector(std::string endpoint, std::chrono::milliseconds timeout, int max_in_flight)
      : endpoint_(std::move(endpoint)), timeout_(timeout), limiter_(max_in_flight) {}
  std::vector<Detection> detect(const Frame& frame) override;

 private:
  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  InFlightLimiter limiter_;
};

// ---------------------------------------------------------------- overlay

// Pre-registered static highlights for a camera: its road sections plus the
// signs, lights and crosswalks visible in the frame.
std::vector<StaticHighlightRegion> static_regions(const CameraConfig& camera, const Frame& frame);

// Pixels covered by a 2 px outline of the polygon, row-major order, unique.
std::vector<std::pair<int, int>> outline_pixels(std::span<const Vec2> polygon, int width, int height);

// New frame with detection masks and static regions outlined. The input frame
// is not modified and dimensions are unchanged.
Frame overlay_highlight(const Frame& frame, std::span<const Detection> detections,
                        std::span<const StaticHighlightRegion> statics);

// ---------------------------------------------------------------- metrics

struct ClassCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
};

struct ConfusionMatrix {
  ClassCounts vehicle;
  ClassCounts person;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// 0/0 ratios are reported as 0.
ClassMetrics detector_metrics(const ClassCounts& counts);

struct DetectorMetrics {
  ClassMetrics vehicle;
  ClassMetrics person;
};
DetectorMetrics detector_metrics(const ConfusionMatrix& cm);

// Greedy confidence-ordered matching of detections to annotations of the
// same class at bbox IoU >= iou_threshold; adds the outcome to `cm`.
void accumulate_confusion(ConfusionMatrix& cm, const Frame& truth, std::span<const Detection> detections,
                          double iou_threshold = 0.5);

double bbox_iou(const BBox& a, const BBox& b);

}  // namespace tmon
