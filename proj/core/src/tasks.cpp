#include "dip/tasks.hpp"

#include <algorithm>

#include "dip/error.hpp"
#include "dip/kernels.hpp"

namespace dip::tasks {

CodeInput make_code_input(std::size_t height, std::size_t width, Rng& rng, const CodeSpec& spec) {
  if (spec.perturb_std < 0.0) throw Error(ErrorKind::InvalidRange, "code perturbation std must be >= 0");
  CodeInput code;
  code.base = rand_uniform(rng, {spec.channels, height, width}, spec.lo, spec.hi);
  code.perturb_std = spec.perturb_std;
  code.distribution = "uniform";
  return code;
}

const char* to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Reconstruct: return "reconstruct";
    case TaskKind::SuperResolve: return "super_resolve";
    case TaskKind::Inpaint: return "inpaint";
  }
  return "?";
}

TaskEnergy::TaskEnergy(TaskKind kind, Tensor observation, Tensor mask, std::size_t factor, Normalization norm)
    : kind_(kind),
      observation_(std::move(observation)),
      mask_(std::move(mask)),
      factor_(factor),
      normalization_(norm) {
  if (observation_.rank() != 3) throw Error(ErrorKind::InvalidShape, "observation must be C x H x W");
}

TaskEnergy TaskEnergy::reconstruction(Tensor x0, Normalization norm) {
  return TaskEnergy(TaskKind::Reconstruct, std::move(x0), Tensor(), 1, norm);
}

TaskEnergy TaskEnergy::super_resolution(Tensor x0, std::size_t factor) {
  if (factor == 0) throw Error(ErrorKind::InvalidShape, "super-resolution factor must be >= 1");
  return TaskEnergy(TaskKind::SuperResolve, std::move(x0), Tensor(), factor, Normalization::Mean);
}

TaskEnergy TaskEnergy::inpainting(Tensor x0, Tensor mask, Normalization norm) {
  if (mask.shape() != x0.shape()) {
    throw Error(ErrorKind::ShapeMismatch,
                "mask " + shape_to_string(mask.shape()) + " vs observation " + shape_to_string(x0.shape()));
  }
  for (double m : mask.data()) {
    if (m != 0.0 && m != 1.0) throw Error(ErrorKind::InvalidMask, "mask values must be 0 or 1");
  }
  return TaskEnergy(TaskKind::Inpaint, std::move(x0), std::move(mask), 1, norm);
}

Shape TaskEnergy::generator_shape() const {
  Shape s = observation_.shape();
  s[1] *= factor_;
  s[2] *= factor_;
  return s;
}

ag::Variable TaskEnergy::evaluate(const ag::Variable& x) const {
  if (x.shape() != generator_shape()) {
    throw Error(ErrorKind::ShapeMismatch, std::string(to_string(kind_)) + " energy expects " +
                                              shape_to_string(generator_shape()) + ", got " +
                                              shape_to_string(x.shape()));
  }
  ag::Tape& tape = x.tape();
  const ag::Variable target = tape.constant(observation_);
  switch (kind_) {
    case TaskKind::Reconstruct:
      return normalization_ == Normalization::Mean ? ag::mse(x, target) : ag::sse(x, target);
    case TaskKind::SuperResolve:
      return ag::mse(ag::lanczos_down(x, factor_), target);
    case TaskKind::Inpaint:
      return normalization_ == Normalization::Mean ? ag::masked_mse(x, target, mask_)
                                                   : ag::masked_sse(x, target, mask_);
  }
  throw Error(ErrorKind::ConfigError, "unknown task kind");
}

double TaskEnergy::evaluate(const Tensor& x) const {
  ag::Tape tape;
  return evaluate(tape.constant(x)).value().item();
}

FlashSetup flash_noflash_setup(const FlashPair& pair, std::size_t code_channels, Rng& rng, std::size_t padded_h,
                               std::size_t padded_w, double dither, double perturb_std) {
  require_same_shape(pair.flash, pair.noflash, "flash/no-flash pair");
  if (pair.flash.rank() != 3) throw Error(ErrorKind::InvalidShape, "flash image must be C x H x W");
  if (code_channels == 0) throw Error(ErrorKind::InvalidShape, "code needs at least one channel");
  const std::size_t c = pair.flash.dim(0), h = pair.flash.dim(1), w = pair.flash.dim(2);
  const std::size_t ph = std::max(padded_h, h), pw = std::max(padded_w, w);

  const Tensor guide = kernels::mirror_pad(pair.flash, (ph - h) / 2, ph - h - (ph - h) / 2, (pw - w) / 2,
                                           pw - w - (pw - w) / 2);
  Tensor code({code_channels, ph, pw});
  const std::size_t plane = ph * pw;
  for (std::size_t k = 0; k < code_channels; ++k) {
    const double* src = guide.data().data() + (k % c) * plane;
    double* dst = code.data().data() + k * plane;
    for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] + (dither > 0.0 ? rng.uniform(0.0, dither) : 0.0);
  }
  CodeInput input;
  input.base = std::move(code);
  input.perturb_std = perturb_std;
  input.distribution = "flash";
  return {TaskEnergy::reconstruction(pair.noflash), std::move(input)};
}

}  // namespace dip::tasks
