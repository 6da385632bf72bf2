#include "tmon/kernels.hpp"

#include <cstring>

namespace tmon::kernels::scalar {

void fill_rgb(std::uint8_t* dst, std::size_t pixels, Rgb color) {
  for (std::size_t i = 0; i < pixels; ++i) {
    dst[3 * i + 0] = color.r;
    dst[3 * i + 1] = color.g;
    dst[3 * i + 2] = color.b;
  }
}

void fill_convex_span(std::uint8_t* row, int y, int x_begin, int x_end,
                      std::span<const HalfPlane> planes, Rgb color) {
  const double py = static_cast<double>(y);
  for (int x = x_begin; x < x_end; ++x) {
    const double px = static_cast<double>(x);
    bool inside = true;
    for (const HalfPlane& h : planes) {
      // Same operation order as the vector path: a*x + (b*y + c).
      const double bc = h.b * py + h.c;
      if (h.a * px + bc < 0.0) {
        inside = false;
        break;
      }
    }
    if (inside) fill_rgb(row + 3 * static_cast<std::ptrdiff_t>(x), 1, color);
  }
}

void fill_disc_span(std::uint8_t* row, int y, int x_begin, int x_end, double cx, double cy,
                    double r2, Rgb color) {
  const double dy = static_cast<double>(y) - cy;
  const double dy2 = dy * dy;
  for (int x = x_begin; x < x_end; ++x) {
    const double dx = static_cast<double>(x) - cx;
    if (dx * dx + dy2 <= r2) fill_rgb(row + 3 * static_cast<std::ptrdiff_t>(x), 1, color);
  }
}

std::size_t count_pixel_diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  const std::size_t pixels = a.size() / 3;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < pixels; ++i) {
    if (std::memcmp(a.data() + 3 * i, b.data() + 3 * i, 3) != 0) ++diff;
  }
  return diff;
}

}  // namespace tmon::kernels::scalar
