// Compiled with -mavx2; only reached through dispatch after a CPUID check.

#include <immintrin.h>

#include <array>
#include <cstring>

#include "tmon/kernels.hpp"

namespace tmon::kernels::avx2 {

void fill_rgb(std::uint8_t* dst, std::size_t pixels, Rgb color) {
  // 96 bytes = 32 pixels = three 32-byte stores, pattern period 3.
  alignas(32) std::array<std::uint8_t, 96> pattern{};
  for (std::size_t i = 0; i < 32; ++i) {
    pattern[3 * i + 0] = color.r;
    pattern[3 * i + 1] = color.g;
    pattern[3 * i + 2] = color.b;
  }
  const __m256i p0 = _mm256_load_si256(reinterpret_cast<const __m256i*>(pattern.data()));
  const __m256i p1 = _mm256_load_si256(reinterpret_cast<const __m256i*>(pattern.data() + 32));
  const __m256i p2 = _mm256_load_si256(reinterpret_cast<const __m256i*>(pattern.data() + 64));
  std::size_t i = 0;
  for (; i + 32 <= pixels; i += 32) {
    std::uint8_t* d = dst + 3 * i;
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(d), p0);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(d + 32), p1);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(d + 64), p2);
  }
  scalar::fill_rgb(dst + 3 * i, pixels - i, color);
}

namespace {

inline void put(std::uint8_t* row, int x, Rgb c) {
  std::uint8_t* d = row + 3 * static_cast<std::ptrdiff_t>(x);
  d[0] = c.r;
  d[1] = c.g;
  d[2] = c.b;
}

inline void put_masked(std::uint8_t* row, int x, int mask, Rgb c) {
  for (int lane = 0; lane < 4; ++lane) {
    if (mask & (1 << lane)) put(row, x + lane, c);
  }
}

}  // namespace

void fill_convex_span(std::uint8_t* row, int y, int x_begin, int x_end,
                      std::span<const HalfPlane> planes, Rgb color) {
  const double py = static_cast<double>(y);
  const __m256d step = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  const __m256d zero = _mm256_setzero_pd();
  int x = x_begin;
  for (; x + 4 <= x_end; x += 4) {
    const __m256d px = _mm256_add_pd(_mm256_set1_pd(static_cast<double>(x)), step);
    __m256d inside = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
    for (const HalfPlane& h : planes) {
      const double bc = h.b * py + h.c;
      const __m256d v = _mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(h.a), px), _mm256_set1_pd(bc));
      inside = _mm256_and_pd(inside, _mm256_cmp_pd(v, zero, _CMP_GE_OQ));
    }
    const int mask = _mm256_movemask_pd(inside);
    if (mask == 0xF) {
      fill_rgb(row + 3 * static_cast<std::ptrdiff_t>(x), 4, color);
    } else if (mask) {
      put_masked(row, x, mask, color);
    }
  }
  scalar::fill_convex_span(row, y, x, x_end, planes, color);
}

void fill_disc_span(std::uint8_t* row, int y, int x_begin, int x_end, double cx, double cy,
                    double r2, Rgb color) {
  const double dy = static_cast<double>(y) - cy;
  const __m256d dy2 = _mm256_set1_pd(dy * dy);
  const __m256d step = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  const __m256d vcx = _mm256_set1_pd(cx);
  const __m256d vr2 = _mm256_set1_pd(r2);
  int x = x_begin;
  for (; x + 4 <= x_end; x += 4) {
    const __m256d px = _mm256_add_pd(_mm256_set1_pd(static_cast<double>(x)), step);
    const __m256d dx = _mm256_sub_pd(px, vcx);
    const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), dy2);
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(d2, vr2, _CMP_LE_OQ));
    if (mask == 0xF) {
      fill_rgb(row + 3 * static_cast<std::ptrdiff_t>(x), 4, color);
    } else if (mask) {
      put_masked(row, x, mask, color);
    }
  }
  scalar::fill_disc_span(row, y, x, x_end, cx, cy, r2, color);
}

std::size_t count_pixel_diff(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  const std::size_t pixels = a.size() / 3;
  std::size_t diff = 0;
  std::size_t i = 0;
  // Whole 32-pixel blocks that compare equal are skipped in three vector
  // compares; blocks with any difference fall back to per-pixel counting.
  for (; i + 32 <= pixels; i += 32) {
    const std::uint8_t* pa = a.data() + 3 * i;
    const std::uint8_t* pb = b.data() + 3 * i;
    __m256i eq = _mm256_cmpeq_epi8(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(pa)),
                                   _mm256_loadu_si256(reinterpret_cast<const __m256i*>(pb)));
    eq = _mm256_and_si256(eq, _mm256_cmpeq_epi8(
                                  _mm256_loadu_si256(reinterpret_cast<const __m256i*>(pa + 32)),
                                  _mm256_loadu_si256(reinterpret_cast<const __m256i*>(pb + 32))));
    eq = _mm256_and_si256(eq, _mm256_cmpeq_epi8(
                                  _mm256_loadu_si256(reinterpret_cast<const __m256i*>(pa + 64)),
                                  _mm256_loadu_si256(reinterpret_cast<const __m256i*>(pb + 64))));
    if (static_cast<unsigned>(_mm256_movemask_epi8(eq)) == 0xFFFFFFFFu) continue;
    diff += scalar::count_pixel_diff({pa, 96}, {pb, 96});
  }
  diff += scalar::count_pixel_diff({a.data() + 3 * i, 3 * (pixels - i)},
                                   {b.data() + 3 * i, 3 * (pixels - i)});
  return diff;
}

}  // namespace tmon::kernels::avx2
