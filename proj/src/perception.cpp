#include "tmon/perception.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tmon/codec.hpp"
#include "tmon/error.hpp"
#include "tmon/rng.hpp"

namespace tmon {

std::string_view to_string(DetectionClass c) { return c == DetectionClass::kVehicle ? "vehicle" : "person"; }

std::string_view to_string(HighlightKind k) {
  switch (k) {
    case HighlightKind::kTrafficSign: return "traffic-sign";
    case HighlightKind::kTrafficLight: return "traffic-light";
    case HighlightKind::kCrosswalk: return "crosswalk";
    case HighlightKind::kRoad: return "road";
  }
  return "road";
}

Rgb highlight::region_color(HighlightKind kind) {
  switch (kind) {
    case HighlightKind::kTrafficSign: return {0, 160, 255};
    case HighlightKind::kTrafficLight: return {255, 0, 255};
    case HighlightKind::kCrosswalk: return {0, 255, 255};
    case HighlightKind::kRoad: return {255, 255, 255};
  }
  return {255, 255, 255};
}

// ---------------------------------------------------------------- oracle

std::vector<Detection> oracle_detect(const Frame& frame, const OracleCorruption& corruption) {
  Rng rng(SeedMixer(corruption.seed).mix(frame.scenario_id).mix(frame.camera_id).mix(frame.tick).value());
  std::vector<Detection> out;
  out.reserve(frame.annotations.size());
  for (const EntityAnnotation& a : frame.annotations) {
    if (corruption.drop_rate > 0.0 && rng.bernoulli(corruption.drop_rate)) continue;
    out.push_back({a.cls == EntityKind::kVehicle ? DetectionClass::kVehicle : DetectionClass::kPerson, 1.0,
                   a.bbox, a.mask});
  }
  if (corruption.mislabel_rate > 0.0) {
    for (const StaticAnnotation& s : frame.statics) {
      if (s.kind != StaticKind::kTree && s.kind != StaticKind::kPole && s.kind != StaticKind::kBench) continue;
      if (!rng.bernoulli(corruption.mislabel_rate)) continue;
      const DetectionClass cls = rng.bernoulli(0.5) ? DetectionClass::kVehicle : DetectionClass::kPerson;
      out.push_back({cls, 0.5 + 0.5 * rng.uniform(), pixel_hull(s.polygon, frame.width, frame.height), s.polygon});
    }
  }
  return out;
}

// ---------------------------------------------------------------- remote

nlohmann::ordered_json detect_request(const Frame& frame) {
  return {{"camera_id", frame.camera_id},
          {"tick", frame.tick},
          {"width", frame.width},
          {"height", frame.height},
          {"pixels_b64", base64_encode({reinterpret_cast<const char*>(frame.pixels.data()), frame.pixels.size()})}};
}

std::vector<Detection> parse_detect_response(std::string_view body, int width, int height,
                                             const std::string& endpoint) {
  const auto fail = [&](const std::string& why) { throw MalformedResponseError(endpoint, why); };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    fail(std::string("response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("detections") || !j["detections"].is_array()) {
    fail("response lacks a detections array");
  }
  std::vector<Detection> out;
  const auto& list = j["detections"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& d = list[i];
    const std::string at = "detections[" + std::to_string(i) + "]";
    if (!d.is_object()) fail(at + " is not an object");
    Detection det;
    const auto cls = d.find("class");
    if (cls == d.end() || !cls->is_string()) fail(at + ".class missing");
    if (*cls == "vehicle") {
      det.cls = DetectionClass::kVehicle;
    } else if (*cls == "person") {
      det.cls = DetectionClass::kPerson;
    } else {
      fail(at + ".class '" + cls->get<std::string>() + "' is not vehicle or person");
    }
    const auto conf = d.find("confidence");
    if (conf == d.end() || !conf->is_number()) fail(at + ".confidence missing");
    det.confidence = conf->get<double>();
    if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
      fail(at + ".confidence " + std::to_string(det.confidence) + " outside [0, 1]");
    }
    const auto bbox = d.find("bbox");
    if (bbox == d.end() || !bbox->is_array() || bbox->size() != 4) fail(at + ".bbox must be [x, y, w, h]");
    std::array<double, 4> b{};
    for (std::size_t k = 0; k < 4; ++k) {
      if (!(*bbox)[k].is_number()) fail(at + ".bbox must be numeric");
      b[k] = (*bbox)[k].get<double>();
      if (!std::isfinite(b[k])) fail(at + ".bbox must be finite");
    }
    if (b[2] < 0.0 || b[3] < 0.0) fail(at + ".bbox has negative size");
    const Polygon box{{b[0], b[1]}, {b[0] + b[2], b[1]}, {b[0] + b[2], b[1] + b[3]}, {b[0], b[1] + b[3]}};
    det.bbox = pixel_hull(clip_to_box(box, 0.0, 0.0, width - 1.0, height - 1.0), width, height);
    const auto mask = d.find("mask");
    if (mask == d.end() || !mask->is_array()) fail(at + ".mask must be an array of [x, y]");
    Polygon poly;
    for (const auto& p : *mask) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        fail(at + ".mask must be an array of [x, y]");
      }
      poly.push_back({p[0].get<double>(), p[1].get<double>()});
      if (!std::isfinite(poly.back().x) || !std::isfinite(poly.back().y)) fail(at + ".mask must be finite");
    }
    det.mask = clip_to_box(poly, 0.0, 0.0, width - 1.0, height - 1.0);
    out.push_back(std::move(det));
  }
  return out;
}

std::vector<Detection> remote_detect(const Frame& frame, const std::string& endpoint,
                                     std::chrono::milliseconds timeout) {
  const HttpReply reply = post_json(endpoint, "/v1/detect", detect_request(frame).dump(), timeout);
  if (reply.status != 200) {
    throw TransportError(endpoint, "HTTP " + std::to_string(reply.status), reply.status);
  }
  return parse_detect_response(reply.body, frame.width, frame.height, endpoint);
}

std::vector<Detection> RemoteDetector::detect(const Frame& frame) {
  auto slot = limiter_.acquire();
  return remote_detect(frame, endpoint_, timeout_);
}

nlohmann::ordered_json to_json(const std::vector<Detection>& detections) {
  auto list = nlohmann::ordered_json::array();
  for (const Detection& d : detections) {
    auto mask = nlohmann::ordered_json::array();
    for (const Vec2& p : d.mask) mask.push_back({p.x, p.y});
    list.push_back({{"class", to_string(d.cls)},
                    {"confidence", d.confidence},
                    {"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}},
                    {"mask", std::move(mask)}});
  }
  return {{"detections", std::move(list)}};
}

// ---------------------------------------------------------------- overlay

std::vector<StaticHighlightRegion> static_regions(const CameraConfig& camera, const Frame& frame) {
  std::vector<StaticHighlightRegion> out;
  if (camera.sections) {
    for (const Section& s : camera.sections->sections) {
      out.push_back({camera.id, HighlightKind::kRoad, s.polygon, highlight::region_color(HighlightKind::kRoad)});
    }
  }
  for (const StaticAnnotation& s : frame.statics) {
    HighlightKind kind;
    switch (s.kind) {
      case StaticKind::kStopSign:
      case StaticKind::kYieldSign:
      case StaticKind::kRoundaboutSign: kind = HighlightKind::kTrafficSign; break;
      case StaticKind::kTrafficLight: kind = HighlightKind::kTrafficLight; break;
      case StaticKind::kCrosswalk: kind = HighlightKind::kCrosswalk; break;
      default: continue;
    }
    out.push_back({camera.id, kind, s.polygon, highlight::region_color(kind)});
  }
  return out;
}

namespace {

// Visits the 2x2 block at every Bresenham step of each closed-polygon edge.
template <typename Fn>
void for_each_outline_pixel(std::span<const Vec2> polygon, int width, int height, Fn&& fn) {
  const std::size_t n = polygon.size();
  if (n < 2) return;
  const auto plot = [&](long x, long y) {
    for (long dy = 0; dy < 2; ++dy) {
      for (long dx = 0; dx < 2; ++dx) {
        const long px = x + dx;
        const long py = y + dy;
        if (px >= 0 && py >= 0 && px < width && py < height) fn(static_cast<int>(px), static_cast<int>(py));
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = polygon[i];
    const Vec2 b = polygon[(i + 1) % n];
    long x0 = std::lround(a.x), y0 = std::lround(a.y);
    const long x1 = std::lround(b.x), y1 = std::lround(b.y);
    const long dx = std::labs(x1 - x0), dy = -std::labs(y1 - y0);
    const long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    long err = dx + dy;
    for (;;) {
      plot(x0, y0);
      if (x0 == x1 && y0 == y1) break;
      const long e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }
}

}  // namespace

std::vector<std::pair<int, int>> outline_pixels(std::span<const Vec2> polygon, int width, int height) {
  std::vector<std::pair<int, int>> out;
  for_each_outline_pixel(polygon, width, height, [&](int x, int y) { out.emplace_back(x, y); });
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Frame overlay_highlight(const Frame& frame, std::span<const Detection> detections,
                        std::span<const StaticHighlightRegion> statics) {
  Frame out = frame;
  const auto paint = [&](std::span<const Vec2> poly, Rgb c) {
    for_each_outline_pixel(poly, out.width, out.height, [&](int x, int y) {
      std::uint8_t* p = out.row(y) + 3 * x;
      p[0] = c.r;
      p[1] = c.g;
      p[2] = c.b;
    });
  };
  for (const StaticHighlightRegion& s : statics) paint(s.polygon, s.color);
  for (const Detection& d : detections) {
    paint(d.mask, d.cls == DetectionClass::kVehicle ? highlight::kVehicle : highlight::kPerson);
  }
  return out;
}

// ---------------------------------------------------------------- metrics

ClassMetrics detector_metrics(const ClassCounts& c) {
  const auto ratio = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
  ClassMetrics m;
  m.precision = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  m.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  return m;
}

DetectorMetrics detector_metrics(const ConfusionMatrix& cm) {
  return {detector_metrics(cm.vehicle), detector_metrics(cm.person)};
}

double bbox_iou(const BBox& a, const BBox& b) {
  const int x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.x + a.w, b.x + b.w), y1 = std::min(a.y + a.h, b.y + b.h);
  const double inter = static_cast<double>(std::max(0, x1 - x0)) * std::max(0, y1 - y0);
  const double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

void accumulate_confusion(ConfusionMatrix& cm, const Frame& truth, std::span<const Detection> detections,
                          double iou_threshold) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return detections[a].confidence > detections[b].confidence; });
  std::vector<bool> taken(truth.annotations.size(), false);
  const auto counts_for = [&](DetectionClass c) -> ClassCounts& {
    return c == DetectionClass::kVehicle ? cm.vehicle : cm.person;
  };
  for (std::size_t di : order) {
    const Detection& d = detections[di];
    const EntityKind want = d.cls == DetectionClass::kVehicle ? EntityKind::kVehicle : EntityKind::kPedestrian;
    double best = iou_threshold;
    std::optional<std::size_t> match;
    for (std::size_t ai = 0; ai < truth.annotations.size(); ++ai) {
      if (taken[ai] || truth.annotations[ai].cls != want) continue;
      const double iou = bbox_iou(d.bbox, truth.annotations[ai].bbox);
      if (iou >= best) {
        best = iou;
        match = ai;
      }
    }
    if (match) {
      taken[*match] = true;
      ++counts_for(d.cls).tp;
    } else {
      ++counts_for(d.cls).fp;
    }
  }
  for (std::size_t ai = 0; ai < truth.annotations.size(); ++ai) {
    if (taken[ai]) continue;
    ++(truth.annotations[ai].cls == EntityKind::kVehicle ? cm.vehicle : cm.person).fn;
  }
}

}  // namespace tmon
