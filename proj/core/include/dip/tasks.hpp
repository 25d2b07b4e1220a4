#pragma once

#include <cstddef>
#include <string>

#include "dip/autograd.hpp"
#include "dip/rng.hpp"
#include "dip/tensor.hpp"

namespace dip::tasks {

/// Fixed generator input z, optionally jittered with fresh Gaussian noise of
/// std `perturb_std` at every iteration.
struct CodeInput {
  Tensor base;
  double perturb_std = 0.0;
  std::string distribution = "uniform";
};

struct CodeSpec {
  std::size_t channels = 32;
  double lo = 0.0;
  double hi = 0.1;
  double perturb_std = 0.0;
};

/// channels x height x width of Uniform[lo, hi) noise.
CodeInput make_code_input(std::size_t height, std::size_t width, Rng& rng, const CodeSpec& spec = {});

enum class TaskKind { Reconstruct, SuperResolve, Inpaint };
enum class Normalization { Mean, Sum };

const char* to_string(TaskKind kind);

/// Data term E(x; x0) for one degraded observation. Immutable.
class TaskEnergy {
 public:
  /// ||x - x0||^2, averaged over elements by default.
  static TaskEnergy reconstruction(Tensor x0, Normalization norm = Normalization::Mean);
  /// mean((lanczos_down(x, t) - x0)^2); x must be C x tH x tW.
  static TaskEnergy super_resolution(Tensor x0, std::size_t factor);
  /// ||(x - x0) * m||^2 with a {0,1} mask of x0's shape (InvalidMask otherwise).
  /// Mean normalization divides by the number of known entries.
  static TaskEnergy inpainting(Tensor x0, Tensor mask, Normalization norm = Normalization::Sum);

  TaskKind kind() const noexcept { return kind_; }
  const Tensor& observation() const noexcept { return observation_; }
  /// Empty unless kind() == Inpaint.
  const Tensor& mask() const noexcept { return mask_; }
  std::size_t factor() const noexcept { return factor_; }
  Normalization normalization() const noexcept { return normalization_; }

  /// Shape the generator output must have.
  Shape generator_shape() const;

  ag::Variable evaluate(const ag::Variable& x) const;
  double evaluate(const Tensor& x) const;

 private:
  TaskEnergy(TaskKind kind, Tensor observation, Tensor mask, std::size_t factor, Normalization norm);

  TaskKind kind_;
  Tensor observation_;
  Tensor mask_;
  std::size_t factor_;
  Normalization normalization_;
};

struct FlashPair {
  Tensor flash;
  Tensor noflash;
};

struct FlashSetup {
  TaskEnergy energy;
  CodeInput code;
};

/// Reconstruction energy on the no-flash image with a code built from the
/// flash image: channel c of the code is flash channel (c mod C) plus a fixed
/// Uniform[0, dither) field. The code is mirror-padded to padded_h x padded_w
/// (centered) when those exceed the image size.
FlashSetup flash_noflash_setup(const FlashPair& pair, std::size_t code_channels, Rng& rng, std::size_t padded_h = 0,
                               std::size_t padded_w = 0, double dither = 0.01, double perturb_std = 0.0);

}  // namespace dip::tasks
