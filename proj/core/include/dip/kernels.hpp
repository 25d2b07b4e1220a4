#pragma once

// Raw (non-differentiated) numeric kernels on C x H x W tensors, together
// with the adjoint kernels the autograd layer uses for backward passes.

#include <cstddef>
#include <vector>

#include "dip/tensor.hpp"

namespace dip::kernels {

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

/// Cross-correlation with zero padding.
/// input: Ci x H x W, weights: Co x Ci x kh x kw -> Co x H' x W' with
/// H' = (H + 2 pad - kh) / stride + 1.
Tensor conv2d_raw(const Tensor& input, const Tensor& weights, ConvGeometry geom);
/// d(loss)/d(input) given d(loss)/d(output).
Tensor conv2d_grad_input(const Tensor& grad_out, const Tensor& weights, const Shape& input_shape,
                         ConvGeometry geom);
/// d(loss)/d(weights) given d(loss)/d(output).
Tensor conv2d_grad_weights(const Tensor& grad_out, const Tensor& input, const Shape& weight_shape,
                           ConvGeometry geom);
Shape conv2d_output_shape(const Shape& input_shape, const Shape& weight_shape, ConvGeometry geom);

enum class ResampleMode {
  NearestUp,    // factor t: out[i] = in[i / t]
  BilinearUp,   // factor t, half-pixel centers, edge clamp
  LanczosDown,  // factor t, Lanczos-3 stretched by t, mirror boundary
  BicubicUp,    // factor t, Catmull-Rom (a = -0.5), mirror boundary
};

const char* to_string(ResampleMode mode);

/// Sparse 1-D resampling operator in CSR layout. Output sample o is
///
///   in[anchor[o]] + sum_k weight[k] * (in[index[k]] - in[anchor[o]])
///
/// over k in [offsets[o], offsets[o+1]), which equals sum_k weight[k] in[index[k]]
/// because the weights sum to one, and returns constants bit-exactly.
struct AxisTaps {
  std::size_t in_len = 0;
  std::size_t out_len = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> index;
  std::vector<double> weight;
  std::vector<std::size_t> anchor;
  /// 1 - sum of the weights of output o (roundoff-sized); the anchor's extra
  /// coefficient in the linear map, used by the adjoint.
  std::vector<double> anchor_weight;
};

constexpr int kLanczosSupport = 3;

/// sinc(x) sinc(x / a) on |x| < a, zero elsewhere.
double lanczos_kernel(double x, int a = kLanczosSupport);
/// Keys cubic convolution kernel with a = -0.5.
double cubic_kernel(double x);

AxisTaps make_axis_taps(ResampleMode mode, std::size_t factor, std::size_t in_len);
std::size_t resampled_length(ResampleMode mode, std::size_t factor, std::size_t in_len);

/// Separable resampling of every channel: rows first, then columns.
Tensor resample_raw(const Tensor& input, ResampleMode mode, std::size_t factor);
/// Transpose of resample_raw (a linear map), applied to an output gradient.
Tensor resample_adjoint(const Tensor& grad_out, ResampleMode mode, std::size_t factor, const Shape& input_shape);

/// Mirror-pads H and W (half-sample symmetric: ... c b a | a b c ... ).
Tensor mirror_pad(const Tensor& input, std::size_t top, std::size_t bottom, std::size_t left, std::size_t right);
/// Window [top, top+h) x [left, left+w) of every channel.
Tensor crop(const Tensor& input, std::size_t top, std::size_t left, std::size_t h, std::size_t w);
/// Adjoint of crop: zero tensor of full_shape with grad pasted at the window.
Tensor uncrop(const Tensor& grad, const Shape& full_shape, std::size_t top, std::size_t left);

Tensor concat_channels(const Tensor& a, const Tensor& b);

/// Index mapping used by mirror_pad and the resampling boundary handling.
std::size_t mirror_index(long long i, std::size_t n);

}  // namespace dip::kernels
