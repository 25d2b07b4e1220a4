#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dip/autograd.hpp"
#include "dip/tensor.hpp"

namespace dip::net {

enum class ArchKind { HourglassSkip, EncoderDecoder, UNet, ResNet };
enum class UpsampleMode { Nearest, Bilinear };
enum class OutputActivation { Sigmoid, None };

std::string_view to_string(ArchKind kind);
std::string_view to_string(UpsampleMode mode);
std::string_view to_string(OutputActivation act);
ArchKind parse_arch_kind(std::string_view name);
UpsampleMode parse_upsample_mode(std::string_view name);
OutputActivation parse_output_activation(std::string_view name);

/// Declarative description of a generator.
///
/// For the multi-scale kinds `depth` is the number of stride-2
/// downsamplings, so the code's spatial size must be divisible by 2^depth.
/// For ResNet it is the number of residual blocks and there is no
/// downsampling. `channels[i]` is the width at level (or block) i and
/// `skip_channels[i]` the width of the skip branch leaving level i (0: none).
struct ArchitectureSpec {
  ArchKind kind = ArchKind::HourglassSkip;
  std::size_t depth = 5;
  std::vector<std::size_t> channels{16, 32, 64, 128, 128};
  std::vector<std::size_t> skip_channels{4, 4, 4, 4, 4};
  std::size_t kernel_down = 3;
  std::size_t kernel_up = 3;
  std::size_t kernel_skip = 1;
  UpsampleMode upsample = UpsampleMode::Bilinear;
  double leaky_slope = 0.2;
  bool normalization = true;
  OutputActivation output = OutputActivation::Sigmoid;
  std::size_t input_channels = 32;
  std::size_t output_channels = 3;

  /// Default generator: 5-level hourglass with 4-channel skips.
  static ArchitectureSpec hourglass();
  static ArchitectureSpec encoder_decoder(std::size_t depth, std::size_t width = 64);
  static ArchitectureSpec unet(std::size_t depth);
  static ArchitectureSpec resnet(std::size_t blocks, std::size_t width = 32);
  /// "hourglass", "ed<N>", "unet<N>", "resnet<N>"; ConfigError otherwise.
  static ArchitectureSpec preset(std::string_view name);

  /// InvalidShape describing the first violated invariant.
  void validate() const;
  /// Spatial sizes must be multiples of this (2^depth, or 1 for ResNet).
  std::size_t spatial_multiple() const;
  /// Smallest valid spatial size >= n: a multiple of spatial_multiple() that
  /// also keeps the coarsest normalized feature map at least 2 x 2.
  std::size_t padded_size(std::size_t n) const;

  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

enum class ParameterRole { ConvWeight, ConvBias, NormScale, NormShift };

struct ParameterInfo {
  std::string name;
  Shape shape;
  ParameterRole role;
  std::size_t fan_in = 0;
  /// Std of the He-style normal init is gain / sqrt(fan_in).
  double gain = 1.0;
};

/// Trainable tensors in registration order; the order and names are a pure
/// function of the ArchitectureSpec.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(std::vector<std::string> names, std::vector<Tensor> tensors, std::uint64_t seed);

  std::size_t size() const noexcept { return tensors_.size(); }
  std::size_t total_count() const noexcept;
  std::uint64_t seed() const noexcept { return seed_; }

  const std::string& name(std::size_t i) const { return names_.at(i); }
  Tensor& operator[](std::size_t i) { return tensors_.at(i); }
  const Tensor& operator[](std::size_t i) const { return tensors_.at(i); }
  /// ConfigError for an unknown name.
  const Tensor& get(std::string_view name) const;
  Tensor& get(std::string_view name);

  std::vector<Tensor>& tensors() noexcept { return tensors_; }
  const std::vector<Tensor>& tensors() const noexcept { return tensors_; }

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::uint64_t seed_ = 0;
};

/// A built generator f_theta: parameter layout plus a differentiable forward.
class Generator {
 public:
  explicit Generator(ArchitectureSpec spec);

  const ArchitectureSpec& spec() const noexcept { return spec_; }
  const std::vector<ParameterInfo>& parameters() const noexcept { return layout_; }
  std::size_t parameter_count() const noexcept;

  /// Conv weights ~ Normal(0, gain / sqrt(fan_in)) with gain sqrt(2 / (1 + slope^2))
  /// before an activation and 1 otherwise; biases and shifts 0, scales 1.
  /// Parameter i draws from stream i + 1 of the seed.
  ParameterSet init(std::uint64_t seed) const;

  /// Output shape for a code of the given shape (InvalidShape if invalid).
  Shape output_shape(const Shape& code_shape) const;

  /// Forward on leaves already bound to the parameters (in layout order).
  ag::Variable forward(std::span<const ag::Variable> params, const ag::Variable& code) const;

  struct Bound {
    ag::Variable image;
    std::vector<ag::Variable> params;
  };
  /// Registers the parameters as leaves on `tape` and runs forward.
  Bound forward(ag::Tape& tape, const ParameterSet& params, const Tensor& code, bool requires_grad = true) const;

 private:
  ArchitectureSpec spec_;
  std::vector<ParameterInfo> layout_;
};

Generator build(const ArchitectureSpec& spec);

}  // namespace dip::net
