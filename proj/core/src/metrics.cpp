#include <cmath>
#include <string>

#include "dip/error.hpp"
#include "dip/imaging.hpp"

namespace dip::img {

double psnr(const Tensor& a, const Tensor& b, std::size_t crop_border) {
  require_same_shape(a, b, "psnr");
  if (a.rank() != 3) throw Error(ErrorKind::InvalidShape, "psnr expects C x H x W");
  const std::size_t c = a.dim(0), h = a.dim(1), w = a.dim(2);
  if (2 * crop_border >= h || 2 * crop_border >= w) {
    throw Error(ErrorKind::InvalidShape,
                "crop border " + std::to_string(crop_border) + " leaves nothing of " + shape_to_string(a.shape()));
  }
  double sse = 0.0;
  std::size_t count = 0;
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = crop_border; y < h - crop_border; ++y)
      for (std::size_t x = crop_border; x < w - crop_border; ++x) {
        const double d = a.at(ch, y, x) - b.at(ch, y, x);
        sse += d * d;
        ++count;
      }
  const double mse = sse / static_cast<double>(count);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

}  // namespace dip::img
