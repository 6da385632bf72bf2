#include <cstdlib>
#include <cstring>

#include "tmon/kernels.hpp"

namespace tmon::kernels {

std::string_view isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

bool avx2_supported() {
#if defined(TMON_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

namespace {

struct Table {
  Isa isa;
  void (*fill_rgb)(std::uint8_t*, std::size_t, Rgb);
  void (*fill_convex_span)(std::uint8_t*, int, int, int, std::span<const HalfPlane>, Rgb);
  void (*fill_disc_span)(std::uint8_t*, int, int, int, double, double, double, Rgb);
  std::size_t (*count_pixel_diff)(std::span<const std::uint8_t>, std::span<const std::uint8_t>);
};

Table select() {
  const char* forced = std::getenv("TMON_ISA");
  const bool force_scalar = forced && std::strcmp(forced, "scalar") == 0;
#if defined(TMON_HAVE_AVX2)
  if (!force_scalar && avx2_supported()) {
    return {Isa::kAvx2, avx2::fill_rgb, avx2::fill_convex_span, avx2::fill_disc_span,
            avx2::count_pixel_diff};
  }
#else
  (void)force_scalar;
#endif
  return {Isa::kScalar, scalar::fill_rgb, scalar::fill_convex_span, scalar::fill_disc_span,
          scalar::count_pixel_diff};
}

const Table& table() {
  static const Table t = select();
  return t;
}

}  // namespace

Isa active_isa() { return table().isa; }

void fill_rgb(std::uint8_t* dst, std::size_t pixels, Rgb color) {
  table().fill_rgb(dst, pixels, color);
}

void fill_convex_span(std::uint8_t* row, int y, int x_begin, int x_end,
                      std::span<const HalfPlane> planes, Rgb color) {
  table().fill_convex_span(row, y, x_begin, x_end, planes, color);
}

void fill_disc_span(std::uint8_t* row, int y, int x_begin, int x_end, double cx, double cy,
                    double r2, Rgb color) {
  table().fill_disc_span(row, y, x_begin, x_end, cx, cy, r2, color);
}

std::size_t count_pixel_diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  return table().count_pixel_diff(a, b);
}

}  // namespace tmon::kernels
