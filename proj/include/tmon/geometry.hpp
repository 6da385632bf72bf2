#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace tmon {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double length(Vec2 a) { return std::hypot(a.x, a.y); }

using Polygon = std::vector<Vec2>;

// Wraps an angle into [0, 2pi).
double normalize_angle(double radians);

// Rectangle of half-extents (hx along heading, hy across) rotated by heading.
struct OrientedRect {
  Vec2 center;
  double hx = 0.0;
  double hy = 0.0;
  double heading = 0.0;

  // Counter-clockwise, starting at the front-left corner.
  std::array<Vec2, 4> corners() const;
};

struct Circle {
  Vec2 center;
  double radius = 0.0;
};

// Interpenetration tests. Touching boundaries do not count as overlap.
bool overlaps(const OrientedRect& a, const OrientedRect& b);
bool overlaps(const Circle& c, const OrientedRect& r);
bool overlaps(const Circle& a, const Circle& b);

// Even-odd containment with boundary points counted as inside.
bool contains(std::span<const Vec2> polygon, Vec2 p);

double signed_area(std::span<const Vec2> polygon);

// Sutherland-Hodgman clip against the axis-aligned box [x0,x1]x[y0,y1].
Polygon clip_to_box(std::span<const Vec2> polygon, double x0, double y0, double x1, double y1);

// Regular n-gon approximation of a circle, counter-clockwise from angle 0.
Polygon circle_outline(Circle c, int segments = 16);

// Integer pixel box, inclusive of x..x+w-1 and y..y+h-1.
struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const BBox&, const BBox&) = default;
};

// floor/ceil hull of the polygon, clipped to a width x height grid. Empty
// (w == 0) when the hull misses the grid.
BBox pixel_hull(std::span<const Vec2> polygon, int width, int height);

}  // namespace tmon
