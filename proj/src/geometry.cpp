#include "tmon/geometry.hpp"

#include <algorithm>
#include <limits>

namespace tmon {

double normalize_angle(double radians) {
  double a = std::fmod(radians, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // fmod of a tiny negative value can round back up to exactly 2pi.
  if (a >= kTwoPi) a = 0.0;
  return a;
}

std::array<Vec2, 4> OrientedRect::corners() const {
  const Vec2 u{std::cos(heading), std::sin(heading)};
  const Vec2 v{-u.y, u.x};
  const Vec2 du = u * hx;
  const Vec2 dv = v * hy;
  return {center + du + dv, center - du + dv, center - du - dv, center + du - dv};
}

namespace {

struct Interval {
  double lo;
  double hi;
};

Interval project_onto(const std::array<Vec2, 4>& pts, Vec2 axis) {
  Interval out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec2& p : pts) {
    const double d = dot(p, axis);
    out.lo = std::min(out.lo, d);
    out.hi = std::max(out.hi, d);
  }
  return out;
}

}  // namespace

bool overlaps(const OrientedRect& a, const OrientedRect& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes{Vec2{std::cos(a.heading), std::sin(a.heading)},
                                 Vec2{-std::sin(a.heading), std::cos(a.heading)},
                                 Vec2{std::cos(b.heading), std::sin(b.heading)},
                                 Vec2{-std::sin(b.heading), std::cos(b.heading)}};
  for (const Vec2& axis : axes) {
    const Interval pa = project_onto(ca, axis);
    const Interval pb = project_onto(cb, axis);
    if (pa.hi <= pb.lo || pb.hi <= pa.lo) return false;
  }
  return true;
}

bool overlaps(const Circle& c, const OrientedRect& r) {
  const Vec2 u{std::cos(r.heading), std::sin(r.heading)};
  const Vec2 v{-u.y, u.x};
  const Vec2 d = c.center - r.center;
  const double lx = std::clamp(dot(d, u), -r.hx, r.hx);
  const double ly = std::clamp(dot(d, v), -r.hy, r.hy);
  const Vec2 nearest = r.center + u * lx + v * ly;
  const Vec2 gap = c.center - nearest;
  return dot(gap, gap) < c.radius * c.radius;
}

bool overlaps(const Circle& a, const Circle& b) {
  const Vec2 d = a.center - b.center;
  const double r = a.radius + b.radius;
  return dot(d, d) < r * r;
}

namespace {

bool on_segment(Vec2 p, Vec2 a, Vec2 b) {
  constexpr double kEps = 1e-9;
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return length(p - a) <= kEps;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return length(p - (a + ab * t)) <= kEps;
}

}  // namespace

bool contains(std::span<const Vec2> polygon, Vec2 p) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (on_segment(p, polygon[j], polygon[i])) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = polygon[i];
    const Vec2 b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double signed_area(std::span<const Vec2> polygon) {
  double twice = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n ? n - 1 : 0; i < n; j = i++) twice += cross(polygon[j], polygon[i]);
  return 0.5 * twice;
}

Polygon clip_to_box(std::span<const Vec2> polygon, double x0, double y0, double x1, double y1) {
  Polygon current(polygon.begin(), polygon.end());
  // Each clip edge: keep points with f(p) >= 0.
  const auto clip = [&](auto&& signed_dist) {
    if (current.empty()) return;
    Polygon out;
    out.reserve(current.size() + 4);
    for (std::size_t i = 0; i < current.size(); ++i) {
      const Vec2 a = current[i];
      const Vec2 b = current[(i + 1) % current.size()];
      const double da = signed_dist(a);
      const double db = signed_dist(b);
      if (da >= 0.0) out.push_back(a);
      if ((da >= 0.0) != (db >= 0.0)) {
        const double t = da / (da - db);
        out.push_back(a + (b - a) * t);
      }
    }
    current = std::move(out);
  };
  clip([&](Vec2 p) { return p.x - x0; });
  clip([&](Vec2 p) { return x1 - p.x; });
  clip([&](Vec2 p) { return p.y - y0; });
  clip([&](Vec2 p) { return y1 - p.y; });
  return current;
}

Polygon circle_outline(Circle c, int segments) {
  Polygon out;
  out.reserve(static_cast<std::size_t>(segments));
  for (int i = 0; i < segments; ++i) {
    const double a = kTwoPi * i / segments;
    out.push_back({c.center.x + c.radius * std::cos(a), c.center.y + c.radius * std::sin(a)});
  }
  return out;
}

BBox pixel_hull(std::span<const Vec2> polygon, int width, int height) {
  if (polygon.empty()) return {};
  double minx = polygon[0].x, maxx = minx, miny = polygon[0].y, maxy = miny;
  for (const Vec2& p : polygon) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(minx)));
  const int y0 = std::max(0, static_cast<int>(std::floor(miny)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(maxx)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(maxy)));
  if (x1 < x0 || y1 < y0) return {};
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

}  // namespace tmon
