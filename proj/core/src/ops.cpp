#include <cmath>

#include "dip/autograd.hpp"
#include "dip/error.hpp"

namespace dip::ag {
namespace {

Tape& same_tape(const Variable& a, const Variable& b) {
  if (&a.tape() != &b.tape()) throw Error(ErrorKind::ShapeMismatch, "operands live on different tapes");
  return a.tape();
}

void accumulate(Tensor* target, const Tensor& g, double alpha = 1.0) {
  if (target) axpy_inplace(*target, g, alpha);
}

}  // namespace

Variable add(const Variable& a, const Variable& b) {
  Tape& tape = same_tape(a, b);
  return tape.record(dip::add(a.value(), b.value()), {a.id(), b.id()},
                     [](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                       accumulate(in[0], g);
                       accumulate(in[1], g);
                     });
}

Variable sub(const Variable& a, const Variable& b) {
  Tape& tape = same_tape(a, b);
  return tape.record(dip::sub(a.value(), b.value()), {a.id(), b.id()},
                     [](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                       accumulate(in[0], g);
                       accumulate(in[1], g, -1.0);
                     });
}

Variable mul(const Variable& a, const Variable& b) {
  Tape& tape = same_tape(a, b);
  const Tensor* av = &a.value();
  const Tensor* bv = &b.value();
  return tape.record(dip::mul(*av, *bv), {a.id(), b.id()},
                     [av, bv](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                       if (in[0]) axpy_inplace(*in[0], dip::mul(g, *bv));
                       if (in[1]) axpy_inplace(*in[1], dip::mul(g, *av));
                     });
}

Variable scale(const Variable& a, double factor) {
  return a.tape().record(dip::scale(a.value(), factor), {a.id()},
                         [factor](const Tensor& g, const Tensor&, std::span<Tensor* const> in) { accumulate(in[0], g, factor); });
}

Variable sum(const Variable& a) {
  return a.tape().record(Tensor::scalar(dip::sum(a.value())), {a.id()},
                         [](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                           const double s = g[0];
                           for (double& v : in[0]->data()) v += s;
                         });
}

Variable mean(const Variable& a) {
  const double inv_n = 1.0 / static_cast<double>(a.value().numel());
  return a.tape().record(Tensor::scalar(dip::mean(a.value())), {a.id()},
                         [inv_n](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                           const double s = g[0] * inv_n;
                           for (double& v : in[0]->data()) v += s;
                         });
}

Variable conv2d(const Variable& input, const Variable& weights, kernels::ConvGeometry geom) {
  Tape& tape = same_tape(input, weights);
  const Tensor* x = &input.value();
  const Tensor* w = &weights.value();
  return tape.record(kernels::conv2d_raw(*x, *w, geom), {input.id(), weights.id()},
                     [x, w, geom](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                       if (in[0]) axpy_inplace(*in[0], kernels::conv2d_grad_input(g, *w, x->shape(), geom));
                       if (in[1]) axpy_inplace(*in[1], kernels::conv2d_grad_weights(g, *x, w->shape(), geom));
                     });
}

Variable bias_add(const Variable& input, const Variable& bias) {
  Tape& tape = same_tape(input, bias);
  const Tensor& x = input.value();
  const Tensor& b = bias.value();
  if (x.rank() != 3 || b.rank() != 1 || b.dim(0) != x.dim(0)) {
    throw Error(ErrorKind::ShapeMismatch, "bias_add: " + shape_to_string(x.shape()) + " + " + shape_to_string(b.shape()));
  }
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  Tensor out = x;
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < plane; ++i) out[ch * plane + i] += b[ch];
  return tape.record(std::move(out), {input.id(), bias.id()},
                     [c, plane](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                       accumulate(in[0], g);
                       if (in[1]) {
                         for (std::size_t ch = 0; ch < c; ++ch) {
                           double s = 0.0;
                           for (std::size_t i = 0; i < plane; ++i) s += g[ch * plane + i];
                           (*in[1])[ch] += s;
                         }
                       }
                     });
}

Variable resample(const Variable& input, kernels::ResampleMode mode, std::size_t factor) {
  const Shape in_shape = input.shape();
  return input.tape().record(kernels::resample_raw(input.value(), mode, factor), {input.id()},
                             [in_shape, mode, factor](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                               axpy_inplace(*in[0], kernels::resample_adjoint(g, mode, factor, in_shape));
                             });
}

Variable nearest_up(const Variable& input, std::size_t factor) {
  return resample(input, kernels::ResampleMode::NearestUp, factor);
}

Variable bilinear_up(const Variable& input, std::size_t factor) {
  return resample(input, kernels::ResampleMode::BilinearUp, factor);
}

Variable lanczos_down(const Variable& input, std::size_t factor) {
  return resample(input, kernels::ResampleMode::LanczosDown, factor);
}

Variable leaky_relu(const Variable& input, double slope) {
  const Tensor* x = &input.value();
  Tensor out(x->shape());
  std::uint64_t bits = 0x9E3779B97F4A7C15ULL;
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const double v = (*x)[i];
    const bool positive = v > 0.0;
    out[i] = positive ? v : slope * v;
    bits = (bits ^ static_cast<std::uint64_t>(positive)) * 0x100000001b3ULL;
  }
  input.tape().mix_kink_signature(bits);
  return input.tape().record(std::move(out), {input.id()},
                             [x, slope](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                               Tensor& gi = *in[0];
                               for (std::size_t i = 0; i < g.numel(); ++i) gi[i] += (*x)[i] > 0.0 ? g[i] : slope * g[i];
                             });
}

Variable sigmoid(const Variable& input) {
  const Tensor& x = input.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const double v = x[i];
    if (v >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  return input.tape().record(std::move(out), {input.id()},
                             [](const Tensor& g, const Tensor& y, std::span<Tensor* const> in) {
                               Tensor& gi = *in[0];
                               for (std::size_t i = 0; i < g.numel(); ++i) gi[i] += g[i] * y[i] * (1.0 - y[i]);
                             });
}

Variable instance_norm(const Variable& input, const Variable& gamma, const Variable& beta, double eps) {
  Tape& tape = same_tape(input, gamma);
  same_tape(input, beta);
  const Tensor& x = input.value();
  if (x.rank() != 3) throw Error(ErrorKind::InvalidShape, "instance_norm expects C x H x W");
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c}) {
    throw Error(ErrorKind::ShapeMismatch, "instance_norm scale/shift must have shape [C]");
  }
  if (plane == 1) throw Error(ErrorKind::DegenerateNormalization, "instance_norm over a 1x1 spatial extent");

  const Tensor& gm = gamma.value();
  const Tensor& bt = beta.value();
  Tensor normalized(x.shape());
  Tensor inv_std({c});
  Tensor out(x.shape());
  const double n = static_cast<double>(plane);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* xs = x.data().data() + ch * plane;
    double mu = 0.0;
    for (std::size_t i = 0; i < plane; ++i) mu += xs[i];
    mu /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < plane; ++i) var += (xs[i] - mu) * (xs[i] - mu);
    var /= n;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[ch] = is;
    for (std::size_t i = 0; i < plane; ++i) {
      const double xh = (xs[i] - mu) * is;
      normalized[ch * plane + i] = xh;
      out[ch * plane + i] = gm[ch] * xh + bt[ch];
    }
  }
  const Tensor* gptr = &gm;
  return tape.record(std::move(out), {input.id(), gamma.id(), beta.id()},
                     [xhat = std::move(normalized), inv_std = std::move(inv_std), gptr, c, plane, n](
                         const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                       for (std::size_t ch = 0; ch < c; ++ch) {
                         const double* gs = g.data().data() + ch * plane;
                         const double* xh = xhat.data().data() + ch * plane;
                         double sum_g = 0.0, sum_gx = 0.0;
                         for (std::size_t i = 0; i < plane; ++i) {
                           sum_g += gs[i];
                           sum_gx += gs[i] * xh[i];
                         }
                         if (in[1]) (*in[1])[ch] += sum_gx;
                         if (in[2]) (*in[2])[ch] += sum_g;
                         if (in[0]) {
                           const double k = (*gptr)[ch] * inv_std[ch];
                           const double mg = sum_g / n, mgx = sum_gx / n;
                           double* gi = in[0]->data().data() + ch * plane;
                           for (std::size_t i = 0; i < plane; ++i) gi[i] += k * (gs[i] - mg - xh[i] * mgx);
                         }
                       }
                     });
}

Variable concat_channels(const Variable& a, const Variable& b) {
  Tape& tape = same_tape(a, b);
  const std::size_t split = a.value().numel();
  return tape.record(kernels::concat_channels(a.value(), b.value()), {a.id(), b.id()},
                     [split](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                       if (in[0]) {
                         auto d = in[0]->data();
                         for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
                       }
                       if (in[1]) {
                         auto d = in[1]->data();
                         for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[split + i];
                       }
                     });
}

Variable crop(const Variable& input, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
  const Shape full = input.shape();
  return input.tape().record(kernels::crop(input.value(), top, left, h, w), {input.id()},
                             [full, top, left](const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                               axpy_inplace(*in[0], kernels::uncrop(g, full, top, left));
                             });
}

namespace {

// sum(((a - b) * mask)^2) with mask == nullptr meaning all ones. Both paths
// evaluate the identical sequence of roundings when mask is all ones.
Variable squared_error(const Variable& a, const Variable& b, const Tensor* mask, double normalizer) {
  Tape& tape = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "squared error");
  if (mask) require_same_shape(a.value(), *mask, "mask");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor residual(av.shape());
  double s = 0.0;
  for (std::size_t i = 0; i < residual.numel(); ++i) {
    double r = av[i] - bv[i];
    if (mask) r = (*mask)[i] == 0.0 ? 0.0 : r * (*mask)[i];
    residual[i] = r;
    s += r * r;
  }
  Tensor mask_copy = mask ? *mask : Tensor();
  return tape.record(Tensor::scalar(s / normalizer), {a.id(), b.id()},
                     [residual = std::move(residual), mask_copy = std::move(mask_copy), normalizer](
                         const Tensor& g, const Tensor&, std::span<Tensor* const> in) {
                       const double k = 2.0 * g[0] / normalizer;
                       const bool masked = !mask_copy.empty();
                       for (std::size_t i = 0; i < residual.numel(); ++i) {
                         double d = k * residual[i];
                         if (masked) d = mask_copy[i] == 0.0 ? 0.0 : d * mask_copy[i];
                         if (in[0]) (*in[0])[i] += d;
                         if (in[1]) (*in[1])[i] -= d;
                       }
                     });
}

}  // namespace

Variable mse(const Variable& a, const Variable& b) {
  return squared_error(a, b, nullptr, static_cast<double>(a.value().numel()));
}

Variable sse(const Variable& a, const Variable& b) { return squared_error(a, b, nullptr, 1.0); }

Variable masked_sse(const Variable& a, const Variable& b, const Tensor& mask) {
  return squared_error(a, b, &mask, 1.0);
}

Variable masked_mse(const Variable& a, const Variable& b, const Tensor& mask) {
  double known = 0.0;
  for (double m : mask.data()) known += m != 0.0 ? 1.0 : 0.0;
  return squared_error(a, b, &mask, known > 0.0 ? known : 1.0);
}

}  // namespace dip::ag
