#pragma once

// Pixel kernels behind the rasterizer and frame comparison. Every kernel has a
// scalar reference in tmon::kernels::scalar and, on x86-64, an AVX2 variant in
// tmon::kernels::avx2. The unqualified entry points dispatch at runtime to the
// best variant the CPU supports; both variants produce identical bytes.
//
// Pixel buffers are row-major RGB8. A pixel's center sits at integer (x, y).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace tmon {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

namespace kernels {

// Inside iff a*x + b*y + c >= 0.
struct HalfPlane {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);
bool avx2_supported();

// Variant used by the dispatching entry points. TMON_ISA=scalar in the
// environment forces the reference path.
Isa active_isa();

// Paints `pixels` consecutive pixels starting at dst.
void fill_rgb(std::uint8_t* dst, std::size_t pixels, Rgb color);

// Paints pixels x in [x_begin, x_end) of row y whose centers satisfy every
// half-plane. `row` points at pixel 0 of the row.
void fill_convex_span(std::uint8_t* row, int y, int x_begin, int x_end,
                      std::span<const HalfPlane> planes, Rgb color);

// Paints pixels x in [x_begin, x_end) of row y with (x-cx)^2 + (y-cy)^2 <= r2.
void fill_disc_span(std::uint8_t* row, int y, int x_begin, int x_end, double cx, double cy,
                    double r2, Rgb color);

// Number of pixels whose RGB triple differs. Buffers must be the same size.
std::size_t count_pixel_diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

namespace scalar {
void fill_rgb(std::uint8_t* dst, std::size_t pixels, Rgb color);
void fill_convex_span(std::uint8_t* row, int y, int x_begin, int x_end,
                      std::span<const HalfPlane> planes, Rgb color);
void fill_disc_span(std::uint8_t* row, int y, int x_begin, int x_end, double cx, double cy,
                    double r2, Rgb color);
std::size_t count_pixel_diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
}  // namespace scalar

#if defined(TMON_HAVE_AVX2)
namespace avx2 {
void fill_rgb(std::uint8_t* dst, std::size_t pixels, Rgb color);
void fill_convex_span(std::uint8_t* row, int y, int x_begin, int x_end,
                      std::span<const HalfPlane> planes, Rgb color);
void fill_disc_span(std::uint8_t* row, int y, int x_begin, int x_end, double cx, double cy,
                    double r2, Rgb color);
std::size_t count_pixel_diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
}  // namespace avx2
#endif

}  // namespace kernels
}  // namespace tmon
