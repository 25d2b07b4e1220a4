#include "dip/network.hpp"

#include <cmath>
#include <optional>

#include "dip/error.hpp"

namespace dip::net {
namespace {

using kernels::ResampleMode;

std::string level_name(const char* prefix, std::size_t i) { return prefix + std::to_string(i); }

// Records parameter shapes; values are channel counts.
class LayoutBuilder {
 public:
  using Value = std::size_t;

  Value conv(const std::string& name, Value in, std::size_t out, std::size_t k, std::size_t, bool bias, double gain) {
    layout.push_back({name + ".weight", {out, in, k, k}, ParameterRole::ConvWeight, in * k * k, gain});
    if (bias) layout.push_back({name + ".bias", {out}, ParameterRole::ConvBias, in * k * k, 0.0});
    return out;
  }
  Value norm(const std::string& name, Value x) {
    layout.push_back({name + ".scale", {x}, ParameterRole::NormScale, 0, 0.0});
    layout.push_back({name + ".shift", {x}, ParameterRole::NormShift, 0, 0.0});
    return x;
  }
  Value act(Value x) { return x; }
  Value up(Value x) { return x; }
  Value concat(Value a, Value b) { return a + b; }
  Value residual(Value a, Value) { return a; }
  Value output(Value x) { return x; }

  std::vector<ParameterInfo> layout;
};

// Evaluates on a tape, consuming bound parameters in layout order.
class ForwardBuilder {
 public:
  using Value = ag::Variable;

  ForwardBuilder(const ArchitectureSpec& spec, std::span<const ag::Variable> params)
      : spec_(spec), params_(params) {}

  Value conv(const std::string&, const Value& x, std::size_t, std::size_t k, std::size_t stride, bool bias, double) {
    Value y = ag::conv2d(x, next(), {stride, (k - 1) / 2});
    if (bias) y = ag::bias_add(y, next());
    return y;
  }
  Value norm(const std::string&, const Value& x) {
    const ag::Variable& scale = next();
    const ag::Variable& shift = next();
    return ag::instance_norm(x, scale, shift);
  }
  Value act(const Value& x) { return ag::leaky_relu(x, spec_.leaky_slope); }
  Value up(const Value& x) {
    return ag::resample(x, spec_.upsample == UpsampleMode::Nearest ? ResampleMode::NearestUp : ResampleMode::BilinearUp,
                        2);
  }
  Value concat(const Value& a, const Value& b) { return ag::concat_channels(a, b); }
  Value residual(const Value& a, const Value& b) { return ag::add(a, b); }
  Value output(const Value& x) { return spec_.output == OutputActivation::Sigmoid ? ag::sigmoid(x) : x; }

  std::size_t consumed() const noexcept { return cursor_; }

 private:
  const ag::Variable& next() {
    if (cursor_ >= params_.size()) throw Error(ErrorKind::ShapeMismatch, "too few parameters bound to generator");
    return params_[cursor_++];
  }

  const ArchitectureSpec& spec_;
  std::span<const ag::Variable> params_;
  std::size_t cursor_ = 0;
};

double activation_gain(double slope) { return std::sqrt(2.0 / (1.0 + slope * slope)); }

template <class B>
typename B::Value conv_block(const ArchitectureSpec& s, B& b, const std::string& name, typename B::Value x,
                             std::size_t out, std::size_t k, std::size_t stride) {
  x = b.conv(name, x, out, k, stride, !s.normalization, activation_gain(s.leaky_slope));
  if (s.normalization) x = b.norm(name + ".norm", x);
  return b.act(x);
}

// Hourglass / encoder-decoder level: optional skip branch at the input
// resolution, stride-2 descent, recursion, upsample, merge.
template <class B>
typename B::Value hourglass_level(const ArchitectureSpec& s, B& b, std::size_t level, typename B::Value x) {
  const std::string p = level_name("level", level);
  std::optional<typename B::Value> skip;
  if (s.skip_channels[level] > 0) skip = conv_block(s, b, p + ".skip", x, s.skip_channels[level], s.kernel_skip, 1);

  auto d = conv_block(s, b, p + ".down1", x, s.channels[level], s.kernel_down, 2);
  d = conv_block(s, b, p + ".down2", d, s.channels[level], s.kernel_down, 1);
  if (level + 1 < s.depth) d = hourglass_level(s, b, level + 1, d);

  auto u = b.up(d);
  if (skip) u = b.concat(*skip, u);
  u = conv_block(s, b, p + ".up1", u, s.channels[level], s.kernel_up, 1);
  return conv_block(s, b, p + ".up2", u, s.channels[level], 1, 1);
}

template <class B>
typename B::Value double_conv(const ArchitectureSpec& s, B& b, const std::string& name, typename B::Value x,
                              std::size_t out) {
  x = conv_block(s, b, name + ".conv1", x, out, s.kernel_up, 1);
  return conv_block(s, b, name + ".conv2", x, out, s.kernel_up, 1);
}

template <class B>
typename B::Value unet_body(const ArchitectureSpec& s, B& b, typename B::Value x) {
  std::vector<typename B::Value> encoded;
  for (std::size_t i = 0; i < s.depth; ++i) {
    const std::string p = level_name("enc", i);
    x = double_conv(s, b, p, x, s.channels[i]);
    encoded.push_back(x);
    x = conv_block(s, b, p + ".down", x, s.channels[i], s.kernel_down, 2);
  }
  x = double_conv(s, b, "bottom", x, s.channels[s.depth - 1]);
  for (std::size_t i = s.depth; i-- > 0;) {
    auto u = b.up(x);
    if (s.skip_channels[i] > 0) u = b.concat(encoded[i], u);
    x = double_conv(s, b, level_name("dec", i), u, s.channels[i]);
  }
  return x;
}

template <class B>
typename B::Value resnet_body(const ArchitectureSpec& s, B& b, typename B::Value x) {
  const double gain = activation_gain(s.leaky_slope);
  x = conv_block(s, b, "head", x, s.channels[0], s.kernel_up, 1);
  for (std::size_t i = 0; i < s.depth; ++i) {
    const std::string p = level_name("block", i);
    auto r = conv_block(s, b, p + ".conv1", x, s.channels[i], s.kernel_up, 1);
    r = b.conv(p + ".conv2", r, s.channels[i], s.kernel_up, 1, !s.normalization, gain);
    if (s.normalization) r = b.norm(p + ".conv2.norm", r);
    x = b.residual(x, r);
  }
  return conv_block(s, b, "tail", x, s.channels.back(), s.kernel_up, 1);
}

template <class B>
typename B::Value generator_graph(const ArchitectureSpec& s, B& b, typename B::Value code) {
  typename B::Value x = code;
  switch (s.kind) {
    case ArchKind::HourglassSkip:
    case ArchKind::EncoderDecoder:
      x = hourglass_level(s, b, 0, x);
      break;
    case ArchKind::UNet:
      x = unet_body(s, b, x);
      break;
    case ArchKind::ResNet:
      x = resnet_body(s, b, x);
      break;
  }
  x = b.conv("out", x, s.output_channels, 1, 1, true, 1.0);
  return b.output(x);
}

std::size_t parse_suffix(std::string_view name, std::string_view prefix) {
  const std::string_view digits = name.substr(prefix.size());
  if (digits.empty()) throw Error(ErrorKind::ConfigError, "architecture preset '" + std::string(name) + "' needs a depth");
  std::size_t v = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') throw Error(ErrorKind::ConfigError, "bad architecture preset '" + std::string(name) + "'");
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  return v;
}

}  // namespace

std::string_view to_string(ArchKind kind) {
  switch (kind) {
    case ArchKind::HourglassSkip: return "hourglass_skip";
    case ArchKind::EncoderDecoder: return "encoder_decoder";
    case ArchKind::UNet: return "unet";
    case ArchKind::ResNet: return "resnet";
  }
  return "?";
}

std::string_view to_string(UpsampleMode mode) { return mode == UpsampleMode::Nearest ? "nearest" : "bilinear"; }

std::string_view to_string(OutputActivation act) { return act == OutputActivation::Sigmoid ? "sigmoid" : "none"; }

ArchKind parse_arch_kind(std::string_view name) {
  for (ArchKind k : {ArchKind::HourglassSkip, ArchKind::EncoderDecoder, ArchKind::UNet, ArchKind::ResNet}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::ConfigError, "unknown architecture kind '" + std::string(name) + "'");
}

UpsampleMode parse_upsample_mode(std::string_view name) {
  if (name == "nearest") return UpsampleMode::Nearest;
  if (name == "bilinear") return UpsampleMode::Bilinear;
  throw Error(ErrorKind::ConfigError, "unknown upsample mode '" + std::string(name) + "'");
}

OutputActivation parse_output_activation(std::string_view name) {
  if (name == "sigmoid") return OutputActivation::Sigmoid;
  if (name == "none") return OutputActivation::None;
  throw Error(ErrorKind::ConfigError, "unknown output activation '" + std::string(name) + "'");
}

ArchitectureSpec ArchitectureSpec::hourglass() { return ArchitectureSpec{}; }

ArchitectureSpec ArchitectureSpec::encoder_decoder(std::size_t depth, std::size_t width) {
  ArchitectureSpec s;
  s.kind = ArchKind::EncoderDecoder;
  s.depth = depth;
  s.channels.assign(depth, width);
  s.skip_channels.assign(depth, 0);
  return s;
}

ArchitectureSpec ArchitectureSpec::unet(std::size_t depth) {
  static constexpr std::size_t widths[] = {16, 32, 64, 128};
  ArchitectureSpec s;
  s.kind = ArchKind::UNet;
  s.depth = depth;
  s.channels.clear();
  for (std::size_t i = 0; i < depth; ++i) s.channels.push_back(widths[std::min<std::size_t>(i, 3)]);
  s.skip_channels = s.channels;
  return s;
}

ArchitectureSpec ArchitectureSpec::resnet(std::size_t blocks, std::size_t width) {
  ArchitectureSpec s;
  s.kind = ArchKind::ResNet;
  s.depth = blocks;
  s.channels.assign(blocks, width);
  s.skip_channels.assign(blocks, 0);
  return s;
}

ArchitectureSpec ArchitectureSpec::preset(std::string_view name) {
  if (name == "hourglass") return hourglass();
  if (name.starts_with("resnet")) return resnet(parse_suffix(name, "resnet"));
  if (name.starts_with("unet")) return unet(parse_suffix(name, "unet"));
  if (name.starts_with("ed")) return encoder_decoder(parse_suffix(name, "ed"));
  throw Error(ErrorKind::ConfigError, "unknown architecture preset '" + std::string(name) + "'");
}

void ArchitectureSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidShape, "architecture: " + msg); };
  if (depth == 0) fail("depth must be >= 1");
  if (channels.size() != depth) fail("channels must list one width per level");
  if (skip_channels.size() != depth) fail("skip_channels must list one width per level");
  for (std::size_t c : channels)
    if (c == 0) fail("channel widths must be >= 1");
  for (std::size_t k : {kernel_down, kernel_up, kernel_skip})
    if (k % 2 == 0) fail("kernel sizes must be odd");
  if (input_channels == 0 || output_channels == 0) fail("input/output channels must be >= 1");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) fail("leaky slope must be in [0, 1)");
  switch (kind) {
    case ArchKind::EncoderDecoder:
      for (std::size_t c : skip_channels)
        if (c != 0) fail("encoder_decoder has no skip connections");
      break;
    case ArchKind::UNet:
      for (std::size_t i = 0; i < depth; ++i)
        if (skip_channels[i] != 0 && skip_channels[i] != channels[i]) fail("unet skips carry the full level width");
      break;
    case ArchKind::ResNet:
      for (std::size_t c : channels)
        if (c != channels[0]) fail("resnet blocks share one width");
      break;
    case ArchKind::HourglassSkip:
      break;
  }
}

std::size_t ArchitectureSpec::spatial_multiple() const {
  return kind == ArchKind::ResNet ? 1 : std::size_t{1} << depth;
}

std::size_t ArchitectureSpec::padded_size(std::size_t n) const {
  const std::size_t m = spatial_multiple();
  const std::size_t minimum = normalization ? 2 * m : m;
  return std::max((n + m - 1) / m * m, minimum);
}

ParameterSet::ParameterSet(std::vector<std::string> names, std::vector<Tensor> tensors, std::uint64_t seed)
    : names_(std::move(names)), tensors_(std::move(tensors)), seed_(seed) {}

std::size_t ParameterSet::total_count() const noexcept {
  std::size_t n = 0;
  for (const Tensor& t : tensors_) n += t.numel();
  return n;
}

const Tensor& ParameterSet::get(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return tensors_[i];
  throw Error(ErrorKind::ConfigError, "no parameter named '" + std::string(name) + "'");
}

Tensor& ParameterSet::get(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const ParameterSet&>(*this).get(name));
}

Generator::Generator(ArchitectureSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  LayoutBuilder builder;
  generator_graph(spec_, builder, spec_.input_channels);
  layout_ = std::move(builder.layout);
}

std::size_t Generator::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const ParameterInfo& p : layout_) n += shape_numel(p.shape);
  return n;
}

ParameterSet Generator::init(std::uint64_t seed) const {
  std::vector<std::string> names;
  std::vector<Tensor> tensors;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const ParameterInfo& info = layout_[i];
    names.push_back(info.name);
    switch (info.role) {
      case ParameterRole::ConvWeight: {
        Rng rng(seed, i + 1);
        tensors.push_back(rand_normal(rng, info.shape, 0.0, info.gain / std::sqrt(static_cast<double>(info.fan_in))));
        break;
      }
      case ParameterRole::NormScale:
        tensors.emplace_back(info.shape, 1.0);
        break;
      case ParameterRole::ConvBias:
      case ParameterRole::NormShift:
        tensors.emplace_back(info.shape, 0.0);
        break;
    }
  }
  return ParameterSet(std::move(names), std::move(tensors), seed);
}

Shape Generator::output_shape(const Shape& code_shape) const {
  if (code_shape.size() != 3) throw Error(ErrorKind::InvalidShape, "code must be C x H x W");
  if (code_shape[0] != spec_.input_channels) {
    throw Error(ErrorKind::InvalidShape, "code has " + std::to_string(code_shape[0]) + " channels, generator expects " +
                                             std::to_string(spec_.input_channels));
  }
  const std::size_t m = spec_.spatial_multiple();
  if (code_shape[1] % m != 0 || code_shape[2] % m != 0) {
    throw Error(ErrorKind::InvalidShape, "code spatial size " + shape_to_string(code_shape) +
                                             " not divisible by " + std::to_string(m) + "; pad the input");
  }
  return {spec_.output_channels, code_shape[1], code_shape[2]};
}

ag::Variable Generator::forward(std::span<const ag::Variable> params, const ag::Variable& code) const {
  output_shape(code.shape());
  if (params.size() != layout_.size()) {
    throw Error(ErrorKind::ShapeMismatch, "generator expects " + std::to_string(layout_.size()) + " parameters, got " +
                                              std::to_string(params.size()));
  }
  ForwardBuilder builder(spec_, params);
  ag::Variable out = generator_graph(spec_, builder, code);
  return out;
}

Generator::Bound Generator::forward(ag::Tape& tape, const ParameterSet& params, const Tensor& code,
                                    bool requires_grad) const {
  Bound bound;
  bound.params.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != layout_.at(i).shape) {
      throw Error(ErrorKind::ShapeMismatch, "parameter " + params.name(i) + " has shape " +
                                                shape_to_string(params[i].shape()));
    }
    bound.params.push_back(tape.leaf(params[i], requires_grad));
  }
  bound.image = forward(bound.params, tape.constant(code));
  return bound;
}

Generator build(const ArchitectureSpec& spec) { return Generator(spec); }

}  // namespace dip::net
