#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "dip/error.hpp"
#include "dip/imaging.hpp"
#include "dip/kernels.hpp"

namespace dip::img {
namespace {

void require_image(const Tensor& t, const char* what) {
  if (t.rank() != 3) throw Error(ErrorKind::InvalidShape, std::string(what) + " expects C x H x W");
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(sep, start);
    parts.push_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return parts;
}

std::size_t parse_count(std::string_view s, std::string_view whole) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) {
    throw Error(ErrorKind::InvalidMask, "bad integer '" + std::string(s) + "' in mask '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

Tensor add_gaussian_noise(const Tensor& image, double sigma_255, Rng& rng) {
  if (!(sigma_255 >= 0.0)) throw Error(ErrorKind::InvalidRange, "noise sigma must be >= 0");
  Tensor out = image;
  if (sigma_255 == 0.0) return out;
  const double sd = sigma_255 / 255.0;
  for (double& v : out.data()) v = std::clamp(v + rng.normal(0.0, sd), 0.0, 1.0);
  return out;
}

Tensor crop_to_multiple(const Tensor& image, std::size_t t) {
  require_image(image, "crop_to_multiple");
  if (t == 0) throw Error(ErrorKind::InvalidShape, "factor must be >= 1");
  const std::size_t h = image.dim(1) / t * t, w = image.dim(2) / t * t;
  if (h == 0 || w == 0) throw Error(ErrorKind::InvalidShape, "image smaller than the scale factor");
  if (h == image.dim(1) && w == image.dim(2)) return image;
  return kernels::crop(image, 0, 0, h, w);
}

Tensor degrade_for_sr(const Tensor& image, std::size_t t) {
  return kernels::resample_raw(crop_to_multiple(image, t), kernels::ResampleMode::LanczosDown, t);
}

Tensor bicubic_up(const Tensor& image, std::size_t t) {
  require_image(image, "bicubic_up");
  return kernels::resample_raw(image, kernels::ResampleMode::BicubicUp, t);
}

MaskSpec MaskSpec::parse(std::string_view text) {
  const std::size_t colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorKind::InvalidMask, "mask must look like kind:params, got '" + std::string(text) + "'");
  }
  const std::string_view kind = text.substr(0, colon);
  const std::string_view rest = text.substr(colon + 1);
  MaskSpec spec;
  if (kind == "bernoulli") {
    spec.kind = MaskKind::Bernoulli;
    double p = 0.0;
    const auto [end, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), p);
    if (ec != std::errc{} || end != rest.data() + rest.size() || !(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::InvalidMask, "bernoulli drop probability must be in [0, 1]: '" + std::string(rest) + "'");
    }
    spec.drop_probability = p;
  } else if (kind == "rect") {
    spec.kind = MaskKind::Rect;
    const auto parts = split(rest, ',');
    if (parts.size() != 4) throw Error(ErrorKind::InvalidMask, "rect mask needs x,y,w,h");
    spec.x = parse_count(parts[0], text);
    spec.y = parse_count(parts[1], text);
    spec.w = parse_count(parts[2], text);
    spec.h = parse_count(parts[3], text);
  } else if (kind == "file") {
    spec.kind = MaskKind::File;
    if (rest.empty()) throw Error(ErrorKind::InvalidMask, "file mask needs a path");
    spec.path = std::string(rest);
  } else {
    throw Error(ErrorKind::InvalidMask, "unknown mask kind '" + std::string(kind) + "'");
  }
  return spec;
}

std::string MaskSpec::to_string() const {
  std::ostringstream os;
  switch (kind) {
    case MaskKind::Bernoulli: os << "bernoulli:" << drop_probability; break;
    case MaskKind::Rect: os << "rect:" << x << ',' << y << ',' << w << ',' << h; break;
    case MaskKind::File: os << "file:" << path; break;
  }
  return os.str();
}

Tensor make_mask(const MaskSpec& spec, const Shape& image_shape, Rng& rng) {
  if (image_shape.size() != 3) throw Error(ErrorKind::InvalidShape, "mask shape must be C x H x W");
  const std::size_t c = image_shape[0], h = image_shape[1], w = image_shape[2];
  Tensor plane({1, h, w}, 1.0);
  switch (spec.kind) {
    case MaskKind::Bernoulli:
      if (!(spec.drop_probability >= 0.0 && spec.drop_probability <= 1.0)) {
        throw Error(ErrorKind::InvalidMask, "bernoulli drop probability must be in [0, 1]");
      }
      for (double& v : plane.data()) v = rng.next_double() < spec.drop_probability ? 0.0 : 1.0;
      break;
    case MaskKind::Rect:
      if (spec.w == 0 || spec.h == 0 || spec.x + spec.w > w || spec.y + spec.h > h) {
        throw Error(ErrorKind::InvalidMask, "rect " + spec.to_string() + " outside a " + std::to_string(w) + "x" +
                                                std::to_string(h) + " image");
      }
      for (std::size_t y = spec.y; y < spec.y + spec.h; ++y)
        for (std::size_t x = spec.x; x < spec.x + spec.w; ++x) plane.at(0, y, x) = 0.0;
      break;
    case MaskKind::File: {
      ImageBuffer bitmap = load(spec.path);
      if (bitmap.width != w || bitmap.height != h) {
        throw Error(ErrorKind::InvalidMask, "mask file " + spec.path + " does not match the image size");
      }
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) plane.at(0, y, x) = bitmap.at(x, y, 0) >= 128 ? 1.0 : 0.0;
      break;
    }
  }
  Tensor mask(image_shape);
  for (std::size_t ch = 0; ch < c; ++ch)
    std::copy(plane.data().begin(), plane.data().end(), mask.data().begin() + static_cast<std::ptrdiff_t>(ch * h * w));
  return mask;
}

Tensor shuffle_pixels(const Tensor& image, Rng& rng) {
  require_image(image, "shuffle_pixels");
  const std::size_t c = image.dim(0), n = image.dim(1) * image.dim(2);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  Tensor out(image.shape());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < n; ++i) out[ch * n + i] = image[ch * n + perm[i]];
  return out;
}

Tensor center_crop(const Tensor& image, std::size_t h, std::size_t w) {
  require_image(image, "center_crop");
  if (h > image.dim(1) || w > image.dim(2)) throw Error(ErrorKind::InvalidShape, "center crop larger than image");
  return kernels::crop(image, (image.dim(1) - h) / 2, (image.dim(2) - w) / 2, h, w);
}

}  // namespace dip::img
