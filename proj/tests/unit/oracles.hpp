#pragma once

// Independent reference implementations used only by the tests. They share
// no code with the library: plain loops, direct formulas.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "dip/tensor.hpp"

namespace oracle {

inline dip::Tensor naive_conv(const dip::Tensor& in, const dip::Tensor& w, std::size_t stride, std::size_t pad) {
  const long ci = static_cast<long>(in.dim(0)), h = static_cast<long>(in.dim(1)), wd = static_cast<long>(in.dim(2));
  const long co = static_cast<long>(w.dim(0)), kh = static_cast<long>(w.dim(2)), kw = static_cast<long>(w.dim(3));
  const long s = static_cast<long>(stride), p = static_cast<long>(pad);
  const long oh = (h + 2 * p - kh) / s + 1, ow = (wd + 2 * p - kw) / s + 1;
  dip::Tensor out({static_cast<std::size_t>(co), static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
  for (long o = 0; o < co; ++o)
    for (long y = 0; y < oh; ++y)
      for (long x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (long c = 0; c < ci; ++c)
          for (long u = 0; u < kh; ++u)
            for (long v = 0; v < kw; ++v) {
              const long iy = y * s + u - p, ix = x * s + v - p;
              if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
              acc += in[(c * h + iy) * wd + ix] * w[((o * ci + c) * kh + u) * kw + v];
            }
        out[(o * oh + y) * ow + x] = acc;
      }
  return out;
}

inline double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x); }

inline double lanczos3(double x) { return std::abs(x) < 3.0 ? sinc(x) * sinc(x / 3.0) : 0.0; }

inline long reflect(long i, long n) {
  while (i < 0 || i >= n) i = i < 0 ? -1 - i : 2 * n - 1 - i;
  return i;
}

/// Normalized weight that lanczos_down(t) gives input sample `i` when
/// producing output sample `o` on an axis of length n (mirror boundary).
inline double lanczos_weight(long o, long i, long t, long n) {
  const double center = (o + 0.5) * t - 0.5;
  double total = 0.0, mine = 0.0;
  for (long j = static_cast<long>(std::floor(center)) - 3 * t - 1; j <= static_cast<long>(center) + 3 * t + 1; ++j) {
    const double w = lanczos3((j - center) / static_cast<double>(t));
    total += w;
    if (reflect(j, n) == i) mine += w;
  }
  return mine / total;
}

/// Catmull-Rom cubic evaluated directly.
inline double catmull_rom(double x) {
  x = std::abs(x);
  if (x < 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
  if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
  return 0.0;
}

inline double dot(const dip::Tensor& a, const dip::Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_abs_diff(const dip::Tensor& a, const dip::Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const dip::Tensor& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace oracle
