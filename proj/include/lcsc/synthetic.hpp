#pragma once

// Deterministic synthetic luminance images for smoke tests and desk-scale
// training when no photographs are at hand: smooth backgrounds overlaid with
// antialiased rectangles, discs, strokes and gratings.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "lcsc/image_io.hpp"

namespace lcsc {

namespace detail {

// Coverage of a signed distance d (negative inside) by a 1-pixel ramp.
inline double coverage(double d) { return std::clamp(0.5 - d, 0.0, 1.0); }

inline void blend(ImagePlane& img, std::size_t y, std::size_t x, double value, double alpha) {
  double& p = img.at(0, y, x);
  p = (1.0 - alpha) * p + alpha * value;
}

}  // namespace detail

inline ImagePlane synthetic_image(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  ImagePlane img(height, width, 1);
  const double h = static_cast<double>(height), w = static_cast<double>(width);

  // Background: a linear gradient plus a low-frequency wave.
  const double g0 = rng.uniform(0.2, 0.8), gy = rng.uniform(-0.3, 0.3), gx = rng.uniform(-0.3, 0.3);
  const double fy = rng.uniform(0.5, 2.0), fx = rng.uniform(0.5, 2.0), amp = rng.uniform(0.0, 0.1);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const double v = static_cast<double>(y) / h, u = static_cast<double>(x) / w;
      img.at(0, y, x) = g0 + gy * (v - 0.5) + gx * (u - 0.5) +
                        amp * std::sin(2 * std::numbers::pi * (fy * v + fx * u));
    }

  const std::size_t shapes = 6 + rng.below(6);
  for (std::size_t s = 0; s < shapes; ++s) {
    const double value = rng.uniform(0.0, 1.0);
    const double cy = rng.uniform(0, h), cx = rng.uniform(0, w);
    const std::size_t kind = rng.below(4);
    const double r = rng.uniform(0.05, 0.25) * std::min(h, w);
    const double theta = rng.uniform(0, std::numbers::pi);
    const double ct = std::cos(theta), st = std::sin(theta);
    const double aspect = rng.uniform(0.3, 1.0);
    const double period = rng.uniform(3.0, 9.0);
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        const double dy = static_cast<double>(y) + 0.5 - cy, dx = static_cast<double>(x) + 0.5 - cx;
        const double ry = -st * dx + ct * dy, rx = ct * dx + st * dy;  // rotated frame
        double d = 0.0;
        if (kind == 0) {  // rotated rectangle
          d = std::max(std::abs(rx) - r, std::abs(ry) - r * aspect);
        } else if (kind == 1) {  // disc
          d = std::hypot(dx, dy) - r;
        } else if (kind == 2) {  // straight stroke
          d = std::max(std::abs(ry) - 0.6 - 2.0 * aspect, std::abs(rx) - 1.5 * r);
        } else {  // grating patch: stripes inside a disc
          const double inside = std::hypot(dx, dy) - r;
          const double stripe = std::sin(2 * std::numbers::pi * rx / period);
          if (inside < 0.5) detail::blend(img, y, x, value, detail::coverage(inside) * 0.5 * (1.0 + stripe));
          continue;
        }
        const double a = detail::coverage(d);
        if (a > 0) detail::blend(img, y, x, value, a);
      }
  }
  return clamp_unit(std::move(img));
}

// Writes `count` PNGs plus a manifest ("train" for all but the last
// `val_count`) into dir. Returns the manifest path.
inline fs::path write_synthetic_dataset(const fs::path& dir, std::size_t count, std::size_t val_count,
                                        std::size_t size, std::uint64_t seed) {
  if (val_count >= count) throw ConfigError("synthetic dataset needs at least one training image");
  fs::create_directories(dir);
  const fs::path manifest = dir / "manifest.txt";
  std::ofstream out(manifest);
  if (!out) throw DataError("cannot write " + manifest.string());
  for (std::size_t i = 0; i < count; ++i) {
    const std::string name = "synth_" + std::to_string(i + 1) + ".png";
    write_image(synthetic_image(size, size, seed * 1000003ull + i), dir / name);
    out << (i + val_count < count ? "train " : "val ") << name << "\n";
  }
  return manifest;
}

}  // namespace lcsc
