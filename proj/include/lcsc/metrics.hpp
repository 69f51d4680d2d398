#pragma once

// Reconstruction quality: PSNR and SSIM on [0,1] planes.

#include <cmath>
#include <limits>
#include <vector>

#include "lcsc/image.hpp"

namespace lcsc {

namespace detail {
inline void require_same_dims(const ImagePlane& a, const ImagePlane& b, const char* what) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels)
    throw DataError(std::string(what) + ": size " + std::to_string(a.height) + "x" + std::to_string(a.width) + "x" +
                    std::to_string(a.channels) + " vs " + std::to_string(b.height) + "x" + std::to_string(b.width) +
                    "x" + std::to_string(b.channels));
}
}  // namespace detail

// 10 log10(1 / MSE) after removing `shave` pixels from every border.
// Identical inputs give +infinity.
inline double psnr(const ImagePlane& a, const ImagePlane& b, std::size_t shave_px = 0) {
  detail::require_same_dims(a, b, "psnr");
  const ImagePlane sa = shave_px ? shave(a, shave_px) : a;
  const ImagePlane sb = shave_px ? shave(b, shave_px) : b;
  double se = 0.0;
  for (std::size_t i = 0; i < sa.data.size(); ++i) {
    const double d = sa.data[i] - sb.data[i];
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(sa.data.size()) / se);
}

// Mean SSIM over every valid 11x11 window, Gaussian weights (sigma 1.5),
// K1 = 0.01, K2 = 0.03, dynamic range 1. Single-channel planes.
inline double ssim(const ImagePlane& a, const ImagePlane& b, std::size_t shave_px = 0) {
  detail::require_same_dims(a, b, "ssim");
  if (a.channels != 1) throw DataError("ssim expects single-channel planes");
  const ImagePlane x = shave_px ? shave(a, shave_px) : a;
  const ImagePlane y = shave_px ? shave(b, shave_px) : b;
  constexpr std::size_t win = 11;
  if (x.height < win || x.width < win)
    throw DataError("ssim: image " + std::to_string(x.height) + "x" + std::to_string(x.width) +
                    " smaller than the 11x11 window");
  std::vector<double> g(win * win);
  double total = 0.0;
  for (std::size_t i = 0; i < win; ++i)
    for (std::size_t j = 0; j < win; ++j) {
      const double di = static_cast<double>(i) - 5.0, dj = static_cast<double>(j) - 5.0;
      g[i * win + j] = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
      total += g[i * win + j];
    }
  for (auto& v : g) v /= total;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + win <= x.height; ++r)
    for (std::size_t c = 0; c + win <= x.width; ++c) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (std::size_t i = 0; i < win; ++i)
        for (std::size_t j = 0; j < win; ++j) {
          const double w = g[i * win + j], px = x.at(0, r + i, c + j), py = y.at(0, r + i, c + j);
          mx += w * px;
          my += w * py;
          sxx += w * px * px;
          syy += w * py * py;
          sxy += w * px * py;
        }
      const double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
      acc += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return acc / static_cast<double>(count);
}

}  // namespace lcsc
