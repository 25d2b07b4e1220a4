#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dip/error.hpp"
#include "dip/imaging.hpp"
#include "dip/kernels.hpp"
#include "oracles.hpp"

using namespace dip;
namespace fs = std::filesystem;

namespace {

img::ImageBuffer random_buffer(Rng& rng, std::size_t w, std::size_t h, std::size_t c) {
  img::ImageBuffer b(w, h, c);
  for (auto& s : b.samples) s = static_cast<std::uint8_t>(rng.below(256));
  return b;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dip_unit_imaging";
  fs::create_directories(dir);
  return dir / name;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected dip::Error");
  return ErrorKind::ConfigError;
}

}  // namespace

TEST_SUITE("imaging") {
  TEST_CASE("PNG and PNM in-memory round trips") {
    Rng rng(1);
    for (std::size_t c : {1u, 3u})
      for (auto [w, h] : {std::pair{1u, 1u}, {7u, 3u}, {64u, 33u}}) {
        const img::ImageBuffer b = random_buffer(rng, w, h, c);
        CHECK(img::decode_png(img::encode_png(b)) == b);
        CHECK(img::decode_pnm(img::encode_pnm(b)) == b);
      }
  }

  TEST_CASE("file round trips dispatch on extension and magic") {
    Rng rng(2);
    const img::ImageBuffer rgb = random_buffer(rng, 5, 4, 3), gray = random_buffer(rng, 6, 2, 1);
    img::save(scratch("a.png"), rgb);
    img::save(scratch("a.ppm"), rgb);
    img::save(scratch("g.pgm"), gray);
    img::save(scratch("g.png"), gray);
    CHECK(img::load(scratch("a.png")) == rgb);
    CHECK(img::load(scratch("a.ppm")) == rgb);
    CHECK(img::load(scratch("g.pgm")).channels == 1);
    CHECK(img::load(scratch("g.png")) == gray);
    CHECK(kind_of([&] { img::save(scratch("a.pgm"), rgb); }) == ErrorKind::ConfigError);
    CHECK(kind_of([&] { img::save(scratch("a.jpg"), rgb); }) == ErrorKind::ConfigError);
  }

  TEST_CASE("white 1x1 PPM payload") {
    img::ImageBuffer b(1, 1, 3);
    b.samples = {255, 255, 255};
    const auto bytes = img::encode_pnm(b);
    REQUIRE(bytes.size() >= 3);
    CHECK(std::vector<std::uint8_t>(bytes.end() - 3, bytes.end()) == std::vector<std::uint8_t>{255, 255, 255});
    CHECK(std::string(bytes.begin(), bytes.end() - 3) == "P6\n1 1\n255\n");
  }

  TEST_CASE("PNM headers may carry comments") {
    const std::string text = "P5\n# made by hand\n2 # width\n1\n255\n";
    std::vector<std::uint8_t> bytes(text.begin(), text.end());
    bytes.push_back(0);
    bytes.push_back(200);
    const img::ImageBuffer b = img::decode_pnm(bytes);
    CHECK(b.channels == 1);
    CHECK(b.samples == std::vector<std::uint8_t>{0, 200});
  }

  TEST_CASE("corrupt files raise DecodeError") {
    Rng rng(3);
    auto png = img::encode_png(random_buffer(rng, 4, 4, 3));
    auto flipped = png;
    flipped[40] ^= 0xFF;
    CHECK(kind_of([&] { img::decode_png(flipped); }) == ErrorKind::DecodeError);
    CHECK(kind_of([&] { img::decode_png(std::span(png).first(png.size() - 20)); }) == ErrorKind::DecodeError);
    const std::string p16 = "P6\n1 1\n65535\n";
    CHECK(kind_of([&] { img::decode_pnm(std::vector<std::uint8_t>(p16.begin(), p16.end())); }) ==
          ErrorKind::DecodeError);
    const std::string truncated = "P6\n4 4\n255\nabc";
    CHECK(kind_of([&] { img::decode_pnm(std::vector<std::uint8_t>(truncated.begin(), truncated.end())); }) ==
          ErrorKind::DecodeError);
    std::ofstream(scratch("junk.png")) << "definitely not an image";
    CHECK(kind_of([&] { img::load(scratch("junk.png")); }) == ErrorKind::DecodeError);
    CHECK(kind_of([&] { img::load(scratch("missing.png")); }) == ErrorKind::DecodeError);
  }

  TEST_CASE("tensor conversion") {
    img::ImageBuffer b(2, 1, 3);
    b.samples = {0, 128, 255, 1, 2, 3};
    const Tensor t = img::to_tensor(b);
    CHECK(t.shape() == Shape{3, 1, 2});
    CHECK(t.at(1, 0, 0) == 128.0 / 255.0);
    CHECK(t.at(2, 0, 1) == 3.0 / 255.0);
    CHECK(img::from_tensor(t) == b);
    // quantization rounds half away from zero and clamps
    const Tensor q({1, 1, 4}, std::vector<double>{0.5 / 255, 1.5 / 255 - 1e-12, -0.2, 1.7});
    CHECK(img::from_tensor(q).samples == std::vector<std::uint8_t>{1, 1, 0, 255});
  }

  TEST_CASE("gaussian noise") {
    Rng rng(4);
    const Tensor gray({1, 100, 1000}, 128.0 / 255.0);
    CHECK(img::add_gaussian_noise(gray, 0.0, rng) == gray);
    const Tensor noisy = img::add_gaussian_noise(gray, 25.0, rng);
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < noisy.numel(); ++i) m += noisy[i] - gray[i];
    m /= noisy.numel();
    for (std::size_t i = 0; i < noisy.numel(); ++i) v += (noisy[i] - gray[i] - m) * (noisy[i] - gray[i] - m);
    const double sd = std::sqrt(v / (noisy.numel() - 1));
    CHECK(std::abs(sd - 25.0 / 255.0) < 0.05 * 25.0 / 255.0);
    const Tensor bright = img::add_gaussian_noise(Tensor({1, 10, 10}, 1.0), 50.0, rng);
    for (double x : bright.data()) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
    Rng a(5), b(5);
    CHECK(img::add_gaussian_noise(gray, 25.0, a) == img::add_gaussian_noise(gray, 25.0, b));
    CHECK_THROWS_AS(img::add_gaussian_noise(gray, -1.0, rng), Error);
  }

  TEST_CASE("masks") {
    Rng rng(6);
    const Tensor m = img::make_mask(img::MaskSpec::parse("bernoulli:0.5"), {3, 250, 400}, rng);
    double known = 0.0;
    for (std::size_t i = 0; i < 250 * 400; ++i) known += m[i];
    CHECK(std::abs(known / 1e5 - 0.5) < 0.005);
    for (std::size_t i = 0; i < 250 * 400; ++i) CHECK(m[i] == m[2 * 250 * 400 + i]);

    const Tensor full = img::make_mask(img::MaskSpec::parse("rect:0,0,16,8"), {3, 8, 16}, rng);
    CHECK(oracle::max_abs(full) == 0.0);
    const Tensor part = img::make_mask(img::MaskSpec::parse("rect:2,1,3,2"), {1, 4, 6}, rng);
    CHECK(sum(part) == 24 - 6);
    CHECK(part.at(0, 1, 2) == 0.0);
    CHECK(part.at(0, 0, 2) == 1.0);

    img::ImageBuffer bitmap(3, 2, 1);
    bitmap.samples = {0, 255, 127, 128, 255, 0};
    img::save(scratch("mask.png"), bitmap);
    const Tensor fm = img::make_mask(img::MaskSpec::parse("file:" + scratch("mask.png").string()), {3, 2, 3}, rng);
    CHECK(fm.at(2, 0, 0) == 0.0);
    CHECK(fm.at(0, 0, 1) == 1.0);
    CHECK(fm.at(0, 0, 2) == 0.0);
    CHECK(fm.at(1, 1, 0) == 1.0);

    for (const char* bad : {"bernoulli:1.5", "bernoulli:x", "rect:1,2,3", "blob:1", "nocolon", "file:"}) {
      INFO(bad);
      CHECK(kind_of([&] { img::MaskSpec::parse(bad); }) == ErrorKind::InvalidMask);
    }
    CHECK(kind_of([&] { img::make_mask(img::MaskSpec::parse("rect:4,0,4,4"), {1, 4, 6}, rng); }) ==
          ErrorKind::InvalidMask);
    CHECK(img::MaskSpec::parse("rect:1,2,3,4").to_string() == "rect:1,2,3,4");
  }

  TEST_CASE("pixel shuffle permutes positions identically per channel") {
    Rng rng(7);
    Tensor t({3, 5, 6});
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 30; ++i) t[c * 30 + i] = 100.0 * c + i;
    const Tensor s = img::shuffle_pixels(t, rng);
    std::vector<double> first(s.data().begin(), s.data().begin() + 30);
    for (std::size_t c = 1; c < 3; ++c)
      for (std::size_t i = 0; i < 30; ++i) CHECK(s[c * 30 + i] == first[i] + 100.0 * c);
    std::sort(first.begin(), first.end());
    for (std::size_t i = 0; i < 30; ++i) CHECK(first[i] == static_cast<double>(i));
    CHECK_FALSE(s == t);
  }

  TEST_CASE("super-resolution degradation") {
    Rng rng(8);
    const Tensor x = rand_uniform(rng, {3, 10, 14}, 0, 1);
    CHECK(img::degrade_for_sr(x, 1) == x);
    CHECK(img::degrade_for_sr(x, 4).shape() == Shape{3, 2, 3});
    CHECK(img::degrade_for_sr(x, 4) ==
          kernels::resample_raw(kernels::crop(x, 0, 0, 8, 12), kernels::ResampleMode::LanczosDown, 4));
  }

  TEST_CASE("bicubic upsampling") {
    Rng rng(9);
    const Tensor x = rand_uniform(rng, {3, 6, 5}, 0, 1);
    CHECK(img::bicubic_up(x, 1) == x);
    const Tensor flat = img::bicubic_up(Tensor({1, 5, 5}, 0.3), 3);
    for (double v : flat.data()) CHECK(v == 0.3);

    const std::size_t n = 12, t = 4;
    Tensor ramp({1, n, n});
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x2 = 0; x2 < n; ++x2) ramp.at(0, y, x2) = 0.1 + 0.03 * x2 + 0.02 * y;
    const Tensor up = img::bicubic_up(ramp, t);
    for (std::size_t oy = 2 * t; oy < (n - 2) * t; ++oy)
      for (std::size_t ox = 2 * t; ox < (n - 2) * t; ++ox) {
        const double sy = (oy + 0.5) / t - 0.5, sx = (ox + 0.5) / t - 0.5;
        CHECK(std::abs(up.at(0, oy, ox) - (0.1 + 0.03 * sx + 0.02 * sy)) < 1e-13);
      }

    // direct Catmull-Rom evaluation at one interior sample
    const Tensor line = rand_uniform(rng, {1, 1, 8}, 0, 1);
    const Tensor wide = img::bicubic_up(line, 2);
    const double src = (7 + 0.5) / 2 - 0.5;
    double want = 0.0;
    for (long i = 0; i < 8; ++i) want += oracle::catmull_rom(i - src) * line[i];
    CHECK(std::abs(wide.at(0, 0, 7) - want) < 1e-14);
  }

  TEST_CASE("psnr") {
    Rng rng(10);
    const Tensor a = rand_uniform(rng, {3, 16, 16}, 0.1, 0.9);
    CHECK(img::psnr(a, a) == img::kPsnrCap);
    Tensor b = a;
    for (std::size_t i = 0; i < b.numel(); ++i) b[i] += (i % 3 ? 1.0 : -1.0) / 255.0;
    CHECK(img::psnr(a, b) == doctest::Approx(20 * std::log10(255.0)).epsilon(1e-10));
    CHECK(std::abs(img::psnr(a, b) - 48.13) < 0.01);
    CHECK(img::psnr(a, b) == img::psnr(b, a));
    Tensor c = a;
    c.at(0, 0, 0) += 0.5;
    CHECK(img::psnr(a, c, 1) == img::kPsnrCap);
    CHECK(img::psnr(a, c) < 99.0);
    CHECK(kind_of([&] { img::psnr(a, b, 8); }) == ErrorKind::InvalidShape);
    CHECK(kind_of([&] { img::psnr(a, Tensor({3, 8, 8})); }) == ErrorKind::ShapeMismatch);
  }

  TEST_CASE("center crop") {
    Rng rng(11);
    const Tensor x = rand_uniform(rng, {3, 10, 9}, 0, 1);
    const Tensor c = img::center_crop(x, 4, 5);
    CHECK(c.shape() == Shape{3, 4, 5});
    CHECK(c.at(2, 0, 0) == x.at(2, 3, 2));
  }
}
