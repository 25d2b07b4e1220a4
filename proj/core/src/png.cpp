#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <string>

#include "dip/error.hpp"
#include "dip/imaging.hpp"

namespace dip::img {
namespace {

constexpr std::array<std::uint8_t, 8> kSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
// Keeps a hostile header from requesting an enormous allocation.
constexpr std::size_t kMaxPixels = std::size_t{1} << 28;

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::DecodeError, "PNG: " + what); }

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4], const std::vector<std::uint8_t>& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + type_at, static_cast<uInt>(4 + data.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

std::uint8_t paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
  if (pb <= pc) return static_cast<std::uint8_t>(b);
  return static_cast<std::uint8_t>(c);
}

std::vector<std::uint8_t> inflate_all(const std::vector<std::uint8_t>& compressed, std::size_t expected) {
  std::vector<std::uint8_t> out(expected);
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) fail("zlib init failed");
  zs.next_in = const_cast<Bytef*>(compressed.data());
  zs.avail_in = static_cast<uInt>(compressed.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t produced = out.size() - zs.avail_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) fail("corrupt or truncated image data");
  return out;
}

std::vector<std::uint8_t> deflate_all(const std::vector<std::uint8_t>& raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> out(bound);
  if (compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw Error(ErrorKind::ConfigError, "PNG: compression failed");
  }
  out.resize(bound);
  return out;
}

void unfilter(std::vector<std::uint8_t>& data, std::size_t height, std::size_t stride, std::size_t bpp,
              std::vector<std::uint8_t>& pixels) {
  std::vector<std::uint8_t> prev(stride, 0);
  for (std::size_t y = 0; y < height; ++y) {
    const std::uint8_t filter = data[y * (stride + 1)];
    std::uint8_t* row = data.data() + y * (stride + 1) + 1;
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= bpp ? row[i - bpp] : 0;
      const int b = prev[i];
      const int c = i >= bpp ? prev[i - bpp] : 0;
      switch (filter) {
        case 0: break;
        case 1: row[i] = static_cast<std::uint8_t>(row[i] + a); break;
        case 2: row[i] = static_cast<std::uint8_t>(row[i] + b); break;
        case 3: row[i] = static_cast<std::uint8_t>(row[i] + ((a + b) >> 1)); break;
        case 4: row[i] = static_cast<std::uint8_t>(row[i] + paeth(a, b, c)); break;
        default: fail("unknown filter type " + std::to_string(filter));
      }
    }
    std::copy_n(row, stride, prev.begin());
    std::copy_n(row, stride, pixels.begin() + static_cast<std::ptrdiff_t>(y * stride));
  }
}

// Standard minimum-sum-of-absolute-differences heuristic over the five filters.
void filter_row(const std::uint8_t* row, const std::uint8_t* prev, std::size_t stride, std::size_t bpp,
                std::vector<std::uint8_t>& out) {
  std::array<std::vector<std::uint8_t>, 5> cand;
  std::size_t best = 0;
  long best_cost = -1;
  for (std::size_t f = 0; f < 5; ++f) {
    cand[f].resize(stride);
    long cost = 0;
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= bpp ? row[i - bpp] : 0;
      const int b = prev[i];
      const int c = i >= bpp ? prev[i - bpp] : 0;
      int pred = 0;
      if (f == 1) pred = a;
      if (f == 2) pred = b;
      if (f == 3) pred = (a + b) >> 1;
      if (f == 4) pred = paeth(a, b, c);
      const auto v = static_cast<std::uint8_t>(row[i] - pred);
      cand[f][i] = v;
      cost += v < 128 ? v : 256 - v;
    }
    if (best_cost < 0 || cost < best_cost) {
      best_cost = cost;
      best = f;
    }
  }
  out.push_back(static_cast<std::uint8_t>(best));
  out.insert(out.end(), cand[best].begin(), cand[best].end());
}

}  // namespace

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || !std::equal(kSignature.begin(), kSignature.end(), bytes.begin())) fail("bad signature");
  std::size_t pos = 8;
  bool have_header = false, have_end = false;
  std::size_t width = 0, height = 0, channels = 0;
  std::vector<std::uint8_t> idat;

  while (pos < bytes.size() && !have_end) {
    if (bytes.size() - pos < 12) fail("truncated chunk");
    const std::uint32_t length = read_be32(&bytes[pos]);
    if (length > bytes.size() - pos - 12) fail("chunk length exceeds file");
    const std::uint8_t* type = &bytes[pos + 4];
    const std::uint8_t* data = &bytes[pos + 8];
    const std::uint32_t stored_crc = read_be32(data + length);
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, type, length + 4);
    if (crc != stored_crc) fail("CRC mismatch");
    const std::string name(reinterpret_cast<const char*>(type), 4);

    if (name == "IHDR") {
      if (have_header || length != 13) fail("bad IHDR");
      width = read_be32(data);
      height = read_be32(data + 4);
      const std::uint8_t depth = data[8], color = data[9], compression = data[10], filter = data[11],
                         interlace = data[12];
      if (width == 0 || height == 0 || width * height > kMaxPixels) fail("unsupported dimensions");
      if (depth != 8) fail("only 8-bit images are supported");
      if (color == 0) {
        channels = 1;
      } else if (color == 2) {
        channels = 3;
      } else {
        fail("only grayscale and RGB images are supported");
      }
      if (compression != 0 || filter != 0) fail("unknown compression or filter method");
      if (interlace != 0) fail("interlaced images are not supported");
      have_header = true;
    } else if (name == "IDAT") {
      if (!have_header) fail("IDAT before IHDR");
      idat.insert(idat.end(), data, data + length);
    } else if (name == "IEND") {
      have_end = true;
    } else if ((type[0] & 0x20) == 0) {
      fail("unknown critical chunk " + name);
    }
    pos += 12 + length;
  }
  if (!have_header || !have_end || idat.empty()) fail("missing required chunks");

  const std::size_t stride = width * channels;
  std::vector<std::uint8_t> raw = inflate_all(idat, height * (stride + 1));
  ImageBuffer image(width, height, channels);
  unfilter(raw, height, stride, channels, image.samples);
  return image;
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& image) {
  if (image.channels != 1 && image.channels != 3) throw Error(ErrorKind::InvalidShape, "PNG: gray or RGB only");
  const std::size_t stride = image.width * image.channels;
  std::vector<std::uint8_t> raw;
  raw.reserve(image.height * (stride + 1));
  const std::vector<std::uint8_t> zeros(stride, 0);
  for (std::size_t y = 0; y < image.height; ++y) {
    const std::uint8_t* row = image.samples.data() + y * stride;
    const std::uint8_t* prev = y == 0 ? zeros.data() : row - stride;
    filter_row(row, prev, stride, image.channels, raw);
  }

  std::vector<std::uint8_t> out(kSignature.begin(), kSignature.end());
  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(image.width));
  put_be32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr.insert(ihdr.end(), {8, static_cast<std::uint8_t>(image.channels == 3 ? 2 : 0), 0, 0, 0});
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", deflate_all(raw));
  put_chunk(out, "IEND", {});
  return out;
}

}  // namespace dip::img
