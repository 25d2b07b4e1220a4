#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dip/rng.hpp"
#include "dip/tensor.hpp"

namespace dip::img {

/// 8-bit image with interleaved samples (row-major, channel fastest).
struct ImageBuffer {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;  // 1 (gray) or 3 (RGB)
  std::vector<std::uint8_t> samples;

  ImageBuffer() = default;
  ImageBuffer(std::size_t w, std::size_t h, std::size_t c);

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) { return samples[(y * width + x) * channels + c]; }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
    return samples[(y * width + x) * channels + c];
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

// ---- codecs ----------------------------------------------------------------
// PNG: 8-bit gray / RGB, non-interlaced. PNM: binary P5 / P6 with maxval 255.
// All decoders throw DecodeError on anything else.

ImageBuffer decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const ImageBuffer& image);
ImageBuffer decode_pnm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pnm(const ImageBuffer& image);

/// Format chosen from the file's magic bytes.
ImageBuffer load(const std::filesystem::path& path);
/// Format chosen from the extension (.png, .ppm, .pgm, .pnm).
void save(const std::filesystem::path& path, const ImageBuffer& image);

/// C x H x W tensor with value = sample / 255.
Tensor to_tensor(const ImageBuffer& image);
/// Clamps to [0, 1] and rounds sample = round(255 v) half away from zero.
ImageBuffer from_tensor(const Tensor& tensor);

Tensor load_tensor(const std::filesystem::path& path);
void save_tensor(const std::filesystem::path& path, const Tensor& tensor);

// ---- degradations -----------------------------------------------------------

/// clamp(x + eps, 0, 1) with eps ~ N(0, (sigma_255 / 255)^2) per sample.
Tensor add_gaussian_noise(const Tensor& image, double sigma_255, Rng& rng);

/// Trims bottom/right rows and columns so H and W are multiples of t.
Tensor crop_to_multiple(const Tensor& image, std::size_t t);
/// Low-resolution observation: lanczos_down(crop_to_multiple(image, t), t),
/// the same operator the super-resolution energy applies.
Tensor degrade_for_sr(const Tensor& image, std::size_t t);

/// Catmull-Rom bicubic upsampling by an integer factor.
Tensor bicubic_up(const Tensor& image, std::size_t t);

enum class MaskKind { Bernoulli, Rect, File };

/// "bernoulli:p" drops each pixel with probability p; "rect:x,y,w,h" drops
/// the rectangle; "file:path" reads a gray bitmap (0 missing, 255 known;
/// values >= 128 count as known).
struct MaskSpec {
  MaskKind kind = MaskKind::Bernoulli;
  double drop_probability = 0.5;
  std::size_t x = 0, y = 0, w = 0, h = 0;
  std::string path;

  /// InvalidMask for malformed text.
  static MaskSpec parse(std::string_view text);
  std::string to_string() const;
};

/// {0,1} mask of `image_shape` (C x H x W); every channel shares one pattern.
Tensor make_mask(const MaskSpec& spec, const Shape& image_shape, Rng& rng);

/// Random permutation of pixel positions, applied identically to all channels.
Tensor shuffle_pixels(const Tensor& image, Rng& rng);

/// Window of size h x w at the center of the image.
Tensor center_crop(const Tensor& image, std::size_t h, std::size_t w);

// ---- metrics ----------------------------------------------------------------

constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) over all channels after removing `crop_border` pixels
/// from every side; identical inputs give kPsnrCap.
double psnr(const Tensor& a, const Tensor& b, std::size_t crop_border = 0);

}  // namespace dip::img
