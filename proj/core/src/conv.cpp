#include <Eigen/Core>

#include "dip/error.hpp"
#include "dip/kernels.hpp"

namespace dip::kernels {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

struct Dims {
  std::size_t ci, h, w, co, kh, kw, ho, wo;
};

Dims resolve(const Shape& in, const Shape& wt, ConvGeometry g) {
  if (in.size() != 3) throw Error(ErrorKind::InvalidShape, "conv2d input must be C x H x W");
  if (wt.size() != 4) throw Error(ErrorKind::InvalidShape, "conv2d weights must be Co x Ci x k x k");
  if (in[0] != wt[1]) {
    throw Error(ErrorKind::ShapeMismatch,
                "conv2d channels: input " + shape_to_string(in) + " weights " + shape_to_string(wt));
  }
  if (g.stride == 0) throw Error(ErrorKind::InvalidShape, "conv2d stride must be >= 1");
  if (wt[2] > in[1] + 2 * g.pad || wt[3] > in[2] + 2 * g.pad) {
    throw Error(ErrorKind::InvalidShape,
                "conv2d kernel " + shape_to_string(wt) + " larger than padded input " + shape_to_string(in));
  }
  Dims d{in[0], in[1], in[2], wt[0], wt[2], wt[3], 0, 0};
  d.ho = (d.h + 2 * g.pad - d.kh) / g.stride + 1;
  d.wo = (d.w + 2 * g.pad - d.kw) / g.stride + 1;
  return d;
}

bool is_pointwise(const Dims& d, ConvGeometry g) { return d.kh == 1 && d.kw == 1 && g.stride == 1 && g.pad == 0; }

// Row (c, ky, kx), column (oy, ox).
RowMatrix im2col(const Tensor& input, const Dims& d, ConvGeometry g) {
  RowMatrix cols(d.ci * d.kh * d.kw, d.ho * d.wo);
  const double* src = input.data().data();
  const long long pad = static_cast<long long>(g.pad);
  for (std::size_t c = 0; c < d.ci; ++c) {
    for (std::size_t ky = 0; ky < d.kh; ++ky) {
      for (std::size_t kx = 0; kx < d.kw; ++kx) {
        double* row = cols.row(static_cast<Eigen::Index>((c * d.kh + ky) * d.kw + kx)).data();
        for (std::size_t oy = 0; oy < d.ho; ++oy) {
          const long long iy = static_cast<long long>(oy * g.stride + ky) - pad;
          double* dst = row + oy * d.wo;
          if (iy < 0 || iy >= static_cast<long long>(d.h)) {
            std::fill(dst, dst + d.wo, 0.0);
            continue;
          }
          const double* line = src + (c * d.h + static_cast<std::size_t>(iy)) * d.w;
          for (std::size_t ox = 0; ox < d.wo; ++ox) {
            const long long ix = static_cast<long long>(ox * g.stride + kx) - pad;
            dst[ox] = (ix < 0 || ix >= static_cast<long long>(d.w)) ? 0.0 : line[ix];
          }
        }
      }
    }
  }
  return cols;
}

void col2im(const RowMatrix& cols, const Dims& d, ConvGeometry g, Tensor& out) {
  double* dst = out.data().data();
  const long long pad = static_cast<long long>(g.pad);
  for (std::size_t c = 0; c < d.ci; ++c) {
    for (std::size_t ky = 0; ky < d.kh; ++ky) {
      for (std::size_t kx = 0; kx < d.kw; ++kx) {
        const double* row = cols.row(static_cast<Eigen::Index>((c * d.kh + ky) * d.kw + kx)).data();
        for (std::size_t oy = 0; oy < d.ho; ++oy) {
          const long long iy = static_cast<long long>(oy * g.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<long long>(d.h)) continue;
          double* line = dst + (c * d.h + static_cast<std::size_t>(iy)) * d.w;
          const double* srcrow = row + oy * d.wo;
          for (std::size_t ox = 0; ox < d.wo; ++ox) {
            const long long ix = static_cast<long long>(ox * g.stride + kx) - pad;
            if (ix >= 0 && ix < static_cast<long long>(d.w)) line[ix] += srcrow[ox];
          }
        }
      }
    }
  }
}

Eigen::Index ei(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace

Shape conv2d_output_shape(const Shape& input_shape, const Shape& weight_shape, ConvGeometry geom) {
  const Dims d = resolve(input_shape, weight_shape, geom);
  return {d.co, d.ho, d.wo};
}

Tensor conv2d_raw(const Tensor& input, const Tensor& weights, ConvGeometry geom) {
  const Dims d = resolve(input.shape(), weights.shape(), geom);
  Tensor out({d.co, d.ho, d.wo});
  ConstMatrixMap w(weights.data().data(), ei(d.co), ei(d.ci * d.kh * d.kw));
  MatrixMap o(out.data().data(), ei(d.co), ei(d.ho * d.wo));
  if (is_pointwise(d, geom)) {
    ConstMatrixMap x(input.data().data(), ei(d.ci), ei(d.h * d.w));
    o.noalias() = w * x;
  } else {
    const RowMatrix cols = im2col(input, d, geom);
    o.noalias() = w * cols;
  }
  debug_check_finite(out, {&input, &weights}, "conv2d");
  return out;
}

Tensor conv2d_grad_input(const Tensor& grad_out, const Tensor& weights, const Shape& input_shape,
                         ConvGeometry geom) {
  const Dims d = resolve(input_shape, weights.shape(), geom);
  if (grad_out.shape() != Shape{d.co, d.ho, d.wo}) {
    throw Error(ErrorKind::ShapeMismatch, "conv2d_grad_input: grad shape " + shape_to_string(grad_out.shape()));
  }
  Tensor grad_in(input_shape);
  ConstMatrixMap w(weights.data().data(), ei(d.co), ei(d.ci * d.kh * d.kw));
  ConstMatrixMap g(grad_out.data().data(), ei(d.co), ei(d.ho * d.wo));
  if (is_pointwise(d, geom)) {
    MatrixMap gi(grad_in.data().data(), ei(d.ci), ei(d.h * d.w));
    gi.noalias() = w.transpose() * g;
  } else {
    const RowMatrix cols = w.transpose() * g;
    col2im(cols, d, geom, grad_in);
  }
  return grad_in;
}

Tensor conv2d_grad_weights(const Tensor& grad_out, const Tensor& input, const Shape& weight_shape,
                           ConvGeometry geom) {
  const Dims d = resolve(input.shape(), weight_shape, geom);
  if (grad_out.shape() != Shape{d.co, d.ho, d.wo}) {
    throw Error(ErrorKind::ShapeMismatch, "conv2d_grad_weights: grad shape " + shape_to_string(grad_out.shape()));
  }
  Tensor grad_w(weight_shape);
  MatrixMap gw(grad_w.data().data(), ei(d.co), ei(d.ci * d.kh * d.kw));
  ConstMatrixMap g(grad_out.data().data(), ei(d.co), ei(d.ho * d.wo));
  if (is_pointwise(d, geom)) {
    ConstMatrixMap x(input.data().data(), ei(d.ci), ei(d.h * d.w));
    gw.noalias() = g * x.transpose();
  } else {
    const RowMatrix cols = im2col(input, d, geom);
    gw.noalias() = g * cols.transpose();
  }
  return grad_w;
}

}  // namespace dip::kernels
