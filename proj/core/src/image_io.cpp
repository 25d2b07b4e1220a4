#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "dip/error.hpp"
#include "dip/imaging.hpp"

namespace dip::img {
namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::DecodeError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::ConfigError, "write failed for " + path.string());
}

// Header token reader for PNM: skips whitespace and '#' comments.
class PnmHeader {
 public:
  explicit PnmHeader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t number() {
    skip_space();
    std::size_t v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (++digits > 9) throw Error(ErrorKind::DecodeError, "PNM header value too large");
    }
    if (digits == 0) throw Error(ErrorKind::DecodeError, "malformed PNM header");
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw Error(ErrorKind::DecodeError, "malformed PNM header");
    return pos_ + 1;
  }

  void seek(std::size_t p) { pos_ = p; }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

bool has_png_signature(std::span<const std::uint8_t> b) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  return b.size() >= 8 && std::equal(sig, sig + 8, b.begin());
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

ImageBuffer::ImageBuffer(std::size_t w, std::size_t h, std::size_t c)
    : width(w), height(h), channels(c), samples(w * h * c, 0) {
  if (w == 0 || h == 0 || (c != 1 && c != 3)) throw Error(ErrorKind::InvalidShape, "image must be non-empty gray or RGB");
}

ImageBuffer decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(ErrorKind::DecodeError, "not a binary PGM/PPM file");
  }
  const std::size_t channels = bytes[1] == '6' ? 3 : 1;
  PnmHeader header(bytes);
  header.seek(2);
  const std::size_t width = header.number();
  const std::size_t height = header.number();
  const std::size_t maxval = header.number();
  if (width == 0 || height == 0) throw Error(ErrorKind::DecodeError, "PNM image has zero size");
  if (maxval != 255) throw Error(ErrorKind::DecodeError, "only 8-bit PNM (maxval 255) is supported");
  const std::size_t start = header.raster_start();
  const std::size_t need = width * height * channels;
  if (bytes.size() < start + need) throw Error(ErrorKind::DecodeError, "truncated PNM raster");
  ImageBuffer image(width, height, channels);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(start), need, image.samples.begin());
  return image;
}

std::vector<std::uint8_t> encode_pnm(const ImageBuffer& image) {
  const std::string header = std::string(image.channels == 3 ? "P6" : "P5") + "\n" + std::to_string(image.width) +
                             " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.samples.begin(), image.samples.end());
  return out;
}

ImageBuffer load(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (has_png_signature(bytes)) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pnm(bytes);
  throw Error(ErrorKind::DecodeError, "unrecognized image format: " + path.string());
}

void save(const std::filesystem::path& path, const ImageBuffer& image) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return write_file(path, encode_png(image));
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    if ((ext == ".ppm" && image.channels != 3) || (ext == ".pgm" && image.channels != 1)) {
      throw Error(ErrorKind::ConfigError, "channel count does not match " + ext);
    }
    return write_file(path, encode_pnm(image));
  }
  throw Error(ErrorKind::ConfigError, "unsupported output extension '" + ext + "'");
}

Tensor to_tensor(const ImageBuffer& image) {
  Tensor t({image.channels, image.height, image.width});
  for (std::size_t c = 0; c < image.channels; ++c)
    for (std::size_t y = 0; y < image.height; ++y)
      for (std::size_t x = 0; x < image.width; ++x) t.at(c, y, x) = image.at(x, y, c) / 255.0;
  return t;
}

ImageBuffer from_tensor(const Tensor& tensor) {
  if (tensor.rank() != 3) throw Error(ErrorKind::InvalidShape, "image tensor must be C x H x W");
  ImageBuffer image(tensor.width(), tensor.height(), tensor.channels());
  for (std::size_t c = 0; c < image.channels; ++c)
    for (std::size_t y = 0; y < image.height; ++y)
      for (std::size_t x = 0; x < image.width; ++x) {
        const double v = std::clamp(tensor.at(c, y, x), 0.0, 1.0);
        image.at(x, y, c) = static_cast<std::uint8_t>(std::round(v * 255.0));
      }
  return image;
}

Tensor load_tensor(const std::filesystem::path& path) { return to_tensor(load(path)); }

void save_tensor(const std::filesystem::path& path, const Tensor& tensor) { save(path, from_tensor(tensor)); }

}  // namespace dip::img
