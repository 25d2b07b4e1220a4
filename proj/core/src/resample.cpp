#include <cmath>
#include <numbers>

#include "dip/error.hpp"
#include "dip/kernels.hpp"

namespace dip::kernels {
namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

void normalize_taps(std::vector<double>& w, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t k = begin; k < end; ++k) s += w[k];
  for (std::size_t k = begin; k < end; ++k) w[k] /= s;
}

// Index of the largest tap, and 1 - sum of the taps.
void set_anchor(AxisTaps& taps, std::size_t begin, std::size_t end) {
  std::size_t largest = begin;
  double s = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    if (std::abs(taps.weight[k]) > std::abs(taps.weight[largest])) largest = k;
    s += taps.weight[k];
  }
  taps.anchor.push_back(taps.index[largest]);
  taps.anchor_weight.push_back(1.0 - s);
}

void require_rank3(const Tensor& t, const char* what) {
  if (t.rank() != 3) throw Error(ErrorKind::InvalidShape, std::string(what) + " expects C x H x W");
}

// Applies taps along the last axis (rows) or the middle axis (columns).
Tensor apply_rows(const Tensor& in, const AxisTaps& taps) {
  const std::size_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  Tensor out({c, h, taps.out_len});
  const double* src = in.data().data();
  double* dst = out.data().data();
  for (std::size_t r = 0; r < c * h; ++r) {
    const double* line = src + r * w;
    double* o = dst + r * taps.out_len;
    for (std::size_t j = 0; j < taps.out_len; ++j) {
      const double a = line[taps.anchor[j]];
      double acc = 0.0;
      for (std::size_t k = taps.offsets[j]; k < taps.offsets[j + 1]; ++k) {
        acc += taps.weight[k] * (line[taps.index[k]] - a);
      }
      o[j] = a + acc;
    }
  }
  return out;
}

Tensor apply_rows_adjoint(const Tensor& grad, const AxisTaps& taps) {
  const std::size_t c = grad.dim(0), h = grad.dim(1);
  Tensor out({c, h, taps.in_len});
  const double* src = grad.data().data();
  double* dst = out.data().data();
  for (std::size_t r = 0; r < c * h; ++r) {
    const double* g = src + r * taps.out_len;
    double* o = dst + r * taps.in_len;
    for (std::size_t j = 0; j < taps.out_len; ++j) {
      for (std::size_t k = taps.offsets[j]; k < taps.offsets[j + 1]; ++k) o[taps.index[k]] += taps.weight[k] * g[j];
      o[taps.anchor[j]] += taps.anchor_weight[j] * g[j];
    }
  }
  return out;
}

Tensor apply_cols(const Tensor& in, const AxisTaps& taps) {
  const std::size_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  Tensor out({c, taps.out_len, w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* plane = in.data().data() + ch * h * w;
    double* o = out.data().data() + ch * taps.out_len * w;
    for (std::size_t i = 0; i < taps.out_len; ++i) {
      double* orow = o + i * w;
      const double* arow = plane + taps.anchor[i] * w;
      for (std::size_t k = taps.offsets[i]; k < taps.offsets[i + 1]; ++k) {
        const double wt = taps.weight[k];
        const double* irow = plane + taps.index[k] * w;
        for (std::size_t x = 0; x < w; ++x) orow[x] += wt * (irow[x] - arow[x]);
      }
      for (std::size_t x = 0; x < w; ++x) orow[x] += arow[x];
    }
  }
  return out;
}

Tensor apply_cols_adjoint(const Tensor& grad, const AxisTaps& taps) {
  const std::size_t c = grad.dim(0), w = grad.dim(2);
  Tensor out({c, taps.in_len, w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* plane = grad.data().data() + ch * taps.out_len * w;
    double* o = out.data().data() + ch * taps.in_len * w;
    for (std::size_t i = 0; i < taps.out_len; ++i) {
      const double* grow = plane + i * w;
      for (std::size_t k = taps.offsets[i]; k < taps.offsets[i + 1]; ++k) {
        const double wt = taps.weight[k];
        double* orow = o + taps.index[k] * w;
        for (std::size_t x = 0; x < w; ++x) orow[x] += wt * grow[x];
      }
      double* arow = o + taps.anchor[i] * w;
      const double aw = taps.anchor_weight[i];
      for (std::size_t x = 0; x < w; ++x) arow[x] += aw * grow[x];
    }
  }
  return out;
}

}  // namespace

const char* to_string(ResampleMode mode) {
  switch (mode) {
    case ResampleMode::NearestUp: return "nearest_up";
    case ResampleMode::BilinearUp: return "bilinear_up";
    case ResampleMode::LanczosDown: return "lanczos_down";
    case ResampleMode::BicubicUp: return "bicubic_up";
  }
  return "?";
}

double lanczos_kernel(double x, int a) {
  const double ax = std::abs(x);
  if (ax >= a) return 0.0;
  // Exact zeros at the nonzero integers keep factor-1 resampling an identity.
  if (ax == std::floor(ax)) return ax == 0.0 ? 1.0 : 0.0;
  return sinc(x) * sinc(x / a);
}

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  const double ax = std::abs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
  return 0.0;
}

std::size_t mirror_index(long long i, std::size_t n) {
  const long long len = static_cast<long long>(n);
  const long long period = 2 * len;
  long long m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < len ? m : period - 1 - m);
}

std::size_t resampled_length(ResampleMode mode, std::size_t factor, std::size_t in_len) {
  if (factor == 0) throw Error(ErrorKind::InvalidShape, "resampling factor must be >= 1");
  if (mode == ResampleMode::LanczosDown) {
    if (in_len % factor != 0) {
      throw Error(ErrorKind::InvalidShape,
                  "lanczos_down: size " + std::to_string(in_len) + " not divisible by " + std::to_string(factor));
    }
    return in_len / factor;
  }
  return in_len * factor;
}

AxisTaps make_axis_taps(ResampleMode mode, std::size_t factor, std::size_t in_len) {
  AxisTaps taps;
  taps.in_len = in_len;
  taps.out_len = resampled_length(mode, factor, in_len);
  taps.offsets.reserve(taps.out_len + 1);
  taps.offsets.push_back(0);
  const double t = static_cast<double>(factor);
  const long long n = static_cast<long long>(in_len);

  auto push = [&](long long i, double w) {
    if (w == 0.0) return;
    taps.index.push_back(mirror_index(i, in_len));
    taps.weight.push_back(w);
  };

  for (std::size_t o = 0; o < taps.out_len; ++o) {
    const std::size_t begin = taps.weight.size();
    switch (mode) {
      case ResampleMode::NearestUp:
        push(static_cast<long long>(o / factor), 1.0);
        break;
      case ResampleMode::BilinearUp: {
        double src = (static_cast<double>(o) + 0.5) / t - 0.5;
        if (src < 0.0) src = 0.0;
        const long long i0 = static_cast<long long>(std::floor(src));
        const long long i1 = std::min(i0 + 1, n - 1);
        const double l = src - static_cast<double>(i0);
        push(i0, 1.0 - l);
        push(i1, l);
        break;
      }
      case ResampleMode::LanczosDown: {
        const double center = (static_cast<double>(o) + 0.5) * t - 0.5;
        const double radius = kLanczosSupport * t;
        const long long lo = static_cast<long long>(std::floor(center - radius));
        const long long hi = static_cast<long long>(std::ceil(center + radius));
        for (long long i = lo; i <= hi; ++i) push(i, lanczos_kernel((static_cast<double>(i) - center) / t));
        break;
      }
      case ResampleMode::BicubicUp: {
        const double src = (static_cast<double>(o) + 0.5) / t - 0.5;
        const long long base = static_cast<long long>(std::floor(src));
        for (long long i = base - 1; i <= base + 2; ++i) push(i, cubic_kernel(static_cast<double>(i) - src));
        break;
      }
    }
    if (mode != ResampleMode::NearestUp) normalize_taps(taps.weight, begin, taps.weight.size());
    set_anchor(taps, begin, taps.weight.size());
    taps.offsets.push_back(taps.weight.size());
  }
  return taps;
}

Tensor resample_raw(const Tensor& input, ResampleMode mode, std::size_t factor) {
  require_rank3(input, to_string(mode));
  const AxisTaps row_taps = make_axis_taps(mode, factor, input.dim(2));
  const AxisTaps col_taps = make_axis_taps(mode, factor, input.dim(1));
  return apply_cols(apply_rows(input, row_taps), col_taps);
}

Tensor resample_adjoint(const Tensor& grad_out, ResampleMode mode, std::size_t factor, const Shape& input_shape) {
  if (input_shape.size() != 3) throw Error(ErrorKind::InvalidShape, "resample_adjoint expects C x H x W");
  const AxisTaps row_taps = make_axis_taps(mode, factor, input_shape[2]);
  const AxisTaps col_taps = make_axis_taps(mode, factor, input_shape[1]);
  const Shape expected{input_shape[0], col_taps.out_len, row_taps.out_len};
  if (grad_out.shape() != expected) {
    throw Error(ErrorKind::ShapeMismatch, "resample_adjoint: grad shape " + shape_to_string(grad_out.shape()) +
                                              " expected " + shape_to_string(expected));
  }
  return apply_rows_adjoint(apply_cols_adjoint(grad_out, col_taps), row_taps);
}

Tensor mirror_pad(const Tensor& input, std::size_t top, std::size_t bottom, std::size_t left, std::size_t right) {
  require_rank3(input, "mirror_pad");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  Tensor out({c, h + top + bottom, w + left + right});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < out.dim(1); ++y) {
      const std::size_t sy = mirror_index(static_cast<long long>(y) - static_cast<long long>(top), h);
      for (std::size_t x = 0; x < out.dim(2); ++x) {
        const std::size_t sx = mirror_index(static_cast<long long>(x) - static_cast<long long>(left), w);
        out.at(ch, y, x) = input.at(ch, sy, sx);
      }
    }
  }
  return out;
}

Tensor crop(const Tensor& input, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
  require_rank3(input, "crop");
  if (top + h > input.dim(1) || left + w > input.dim(2)) {
    throw Error(ErrorKind::InvalidShape, "crop window exceeds " + shape_to_string(input.shape()));
  }
  const std::size_t c = input.dim(0);
  Tensor out({c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) out.at(ch, y, x) = input.at(ch, top + y, left + x);
  return out;
}

Tensor uncrop(const Tensor& grad, const Shape& full_shape, std::size_t top, std::size_t left) {
  Tensor out(full_shape);
  for (std::size_t ch = 0; ch < grad.dim(0); ++ch)
    for (std::size_t y = 0; y < grad.dim(1); ++y)
      for (std::size_t x = 0; x < grad.dim(2); ++x) out.at(ch, top + y, left + x) = grad.at(ch, y, x);
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank3(a, "concat");
  require_rank3(b, "concat");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw Error(ErrorKind::ShapeMismatch,
                "concat spatial sizes " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
  Tensor out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(a.numel()));
  return out;
}

}  // namespace dip::kernels
