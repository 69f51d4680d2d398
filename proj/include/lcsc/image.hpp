#pragma once

// Image planes and the training-pair pipeline: colour conversion, bicubic
// resampling, normalisation, patch extraction and rotation augmentation.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lcsc/error.hpp"
#include "lcsc/tensor.hpp"

namespace lcsc {

enum class ColorSpace { RGB, YCbCr, LuminanceY };
enum class Range { Unit, Signed };  // [0,1] or [-1,1]

// Planar storage: channel, then row, then column.
struct ImagePlane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  ColorSpace space = ColorSpace::LuminanceY;
  Range range = Range::Unit;
  std::vector<double> data;

  ImagePlane() = default;
  ImagePlane(std::size_t h, std::size_t w, std::size_t c, ColorSpace s = ColorSpace::LuminanceY, double fill = 0.0)
      : height(h), width(w), channels(c), space(s), data(h * w * c, fill) {}

  double& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }
  std::size_t pixels() const { return height * width; }
  bool empty() const { return data.empty(); }

  ImagePlane channel(std::size_t c) const {
    ImagePlane out(height, width, 1, ColorSpace::LuminanceY);
    out.range = range;
    std::copy_n(data.begin() + static_cast<long>(c * pixels()), pixels(), out.data.begin());
    return out;
  }

  ImagePlane crop(std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) const {
    if (y0 + h > height || x0 + w > width)
      throw DataError("crop " + std::to_string(h) + "x" + std::to_string(w) + " at (" + std::to_string(y0) + "," +
                      std::to_string(x0) + ") exceeds " + std::to_string(height) + "x" + std::to_string(width));
    ImagePlane out(h, w, channels, space);
    out.range = range;
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) out.at(c, y, x) = at(c, y0 + y, x0 + x);
    return out;
  }

  template <typename T>
  Tensor<T> to_tensor() const {
    Tensor<T> t(Shape{1, channels, height, width});
    for (std::size_t i = 0; i < data.size(); ++i) t[i] = static_cast<T>(data[i]);
    return t;
  }

  template <typename T>
  static ImagePlane from_tensor(const Tensor<T>& t, std::size_t batch = 0, Range r = Range::Unit) {
    const Shape& s = t.shape();
    ImagePlane out(s.h, s.w, s.c, s.c == 3 ? ColorSpace::RGB : ColorSpace::LuminanceY);
    out.range = r;
    const T* src = t.plane(batch, 0);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = static_cast<double>(src[i]);
    return out;
  }

  friend bool operator==(const ImagePlane&, const ImagePlane&) = default;
};

inline ImagePlane clamp_unit(ImagePlane img) {
  for (auto& v : img.data) v = std::clamp(v, 0.0, 1.0);
  return img;
}

inline ImagePlane subtract(const ImagePlane& a, const ImagePlane& b) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels)
    throw DataError("image size mismatch in subtract");
  ImagePlane out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

// ---------------------------------------------------------------------------
// Colour (BT.601, full range)

inline ImagePlane to_luminance(const ImagePlane& rgb) {
  if (rgb.channels != 3) throw DataError("to_luminance expects 3 channels, got " + std::to_string(rgb.channels));
  ImagePlane y(rgb.height, rgb.width, 1, ColorSpace::LuminanceY);
  const std::size_t n = rgb.pixels();
  for (std::size_t i = 0; i < n; ++i)
    y.data[i] = 0.299 * rgb.data[i] + 0.587 * rgb.data[n + i] + 0.114 * rgb.data[2 * n + i];
  return y;
}

// Cb and Cr are offset by 0.5 so every channel stays in [0,1].
inline ImagePlane rgb_to_ycbcr(const ImagePlane& rgb) {
  if (rgb.channels != 3) throw DataError("rgb_to_ycbcr expects 3 channels, got " + std::to_string(rgb.channels));
  ImagePlane out(rgb.height, rgb.width, 3, ColorSpace::YCbCr);
  const std::size_t n = rgb.pixels();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rgb.data[i], g = rgb.data[n + i], b = rgb.data[2 * n + i];
    out.data[i] = 0.299 * r + 0.587 * g + 0.114 * b;
    out.data[n + i] = 0.5 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    out.data[2 * n + i] = 0.5 + 0.5 * r - 0.418688 * g - 0.081312 * b;
  }
  return out;
}

inline ImagePlane ycbcr_to_rgb(const ImagePlane& ycc) {
  if (ycc.channels != 3) throw DataError("ycbcr_to_rgb expects 3 channels, got " + std::to_string(ycc.channels));
  ImagePlane out(ycc.height, ycc.width, 3, ColorSpace::RGB);
  const std::size_t n = ycc.pixels();
  for (std::size_t i = 0; i < n; ++i) {
    const double y = ycc.data[i], cb = ycc.data[n + i] - 0.5, cr = ycc.data[2 * n + i] - 0.5;
    out.data[i] = y + 1.402 * cr;
    out.data[n + i] = y - 0.344136 * cb - 0.714136 * cr;
    out.data[2 * n + i] = y + 1.772 * cb;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bicubic resampling

// Keys cubic convolution kernel with a = -0.5.
inline double keys_cubic(double x) {
  const double ax = std::abs(x), ax2 = ax * ax, ax3 = ax2 * ax;
  if (ax <= 1.0) return 1.5 * ax3 - 2.5 * ax2 + 1.0;
  if (ax < 2.0) return -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0;
  return 0.0;
}

namespace detail {

struct Taps {
  std::vector<std::size_t> index;  // clamped source indices
  std::vector<double> weight;
};

// Output i samples the input at u = (i + 0.5) / scale - 0.5. On downscale the
// kernel is stretched by 1/scale so it acts as a low-pass filter.
inline std::vector<Taps> resize_taps(std::size_t in, std::size_t out, double scale) {
  const bool shrink = scale < 1.0;
  const double support = shrink ? 2.0 / scale : 2.0;
  std::vector<Taps> taps(out);
  for (std::size_t i = 0; i < out; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / scale - 0.5;
    const long first = static_cast<long>(std::floor(u - support));
    const long last = static_cast<long>(std::ceil(u + support));
    double total = 0.0;
    for (long j = first; j <= last; ++j) {
      const double d = u - static_cast<double>(j);
      const double w = shrink ? scale * keys_cubic(scale * d) : keys_cubic(d);
      if (w == 0.0) continue;
      taps[i].index.push_back(static_cast<std::size_t>(std::clamp<long>(j, 0, static_cast<long>(in) - 1)));
      taps[i].weight.push_back(w);
      total += w;
    }
    for (auto& w : taps[i].weight) w /= total;
  }
  return taps;
}

}  // namespace detail

// Resizes every channel to out_h x out_w with separate vertical and
// horizontal scale factors; edges are clamped.
inline ImagePlane bicubic_resize(const ImagePlane& img, std::size_t out_h, std::size_t out_w, double scale_y,
                                 double scale_x) {
  if (img.empty()) throw DataError("bicubic_resize: empty image");
  if (out_h == 0 || out_w == 0)
    throw DataError("bicubic_resize: degenerate output size " + std::to_string(out_h) + "x" + std::to_string(out_w));
  if (!(scale_y > 0.0) || !(scale_x > 0.0)) throw DataError("bicubic_resize: scale must be positive");
  const auto ty = detail::resize_taps(img.height, out_h, scale_y);
  const auto tx = detail::resize_taps(img.width, out_w, scale_x);
  ImagePlane out(out_h, out_w, img.channels, img.space);
  out.range = img.range;
  std::vector<double> rows(out_h * img.width);
  for (std::size_t c = 0; c < img.channels; ++c) {
    const double* src = img.data.data() + c * img.pixels();
    for (std::size_t y = 0; y < out_h; ++y) {
      double* dst = rows.data() + y * img.width;
      std::fill_n(dst, img.width, 0.0);
      for (std::size_t k = 0; k < ty[y].index.size(); ++k) {
        const double w = ty[y].weight[k];
        const double* srow = src + ty[y].index[k] * img.width;
        for (std::size_t x = 0; x < img.width; ++x) dst[x] += w * srow[x];
      }
    }
    for (std::size_t y = 0; y < out_h; ++y)
      for (std::size_t x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < tx[x].index.size(); ++k)
          acc += tx[x].weight[k] * rows[y * img.width + tx[x].index[k]];
        out.at(c, y, x) = acc;
      }
  }
  return out;
}

// Output size is ceil(size * scale) on each axis.
inline ImagePlane bicubic_resize(const ImagePlane& img, double scale) {
  if (!(scale > 0.0)) throw DataError("bicubic_resize: scale must be positive, got " + std::to_string(scale));
  const auto dim = [scale](std::size_t n) {
    // Guard against ceil(10 * 0.1 ...) style rounding just above an integer.
    const double v = static_cast<double>(n) * scale;
    const double r = std::round(v);
    return static_cast<std::size_t>(std::abs(v - r) < 1e-9 ? r : std::ceil(v));
  };
  return bicubic_resize(img, dim(img.height), dim(img.width), scale, scale);
}

inline ImagePlane bicubic_resize(const ImagePlane& img, std::size_t out_h, std::size_t out_w) {
  return bicubic_resize(img, out_h, out_w, static_cast<double>(out_h) / static_cast<double>(img.height),
                        static_cast<double>(out_w) / static_cast<double>(img.width));
}

// ---------------------------------------------------------------------------
// Normalisation

inline ImagePlane normalize(const ImagePlane& img) {
  if (img.range != Range::Unit) throw DataError("normalize: image is already normalized");
  ImagePlane out = img;
  for (auto& v : out.data) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("normalize: value " + std::to_string(v) + " outside [0,1]");
    v = 2.0 * v - 1.0;
  }
  out.range = Range::Signed;
  return out;
}

inline ImagePlane denormalize(const ImagePlane& img) {
  if (img.range != Range::Signed) throw DataError("denormalize: image is not normalized");
  ImagePlane out = img;
  for (auto& v : out.data) {
    if (!(v >= -1.0 && v <= 1.0)) throw DataError("denormalize: value " + std::to_string(v) + " outside [-1,1]");
    v = (v + 1.0) / 2.0;
  }
  out.range = Range::Unit;
  return out;
}

// Removes `border` pixels from every side.
inline ImagePlane shave(const ImagePlane& img, std::size_t border) {
  if (2 * border >= img.height || 2 * border >= img.width)
    throw DataError("shave: border " + std::to_string(border) + " too large for " + std::to_string(img.height) + "x" +
                    std::to_string(img.width));
  return img.crop(border, border, img.height - 2 * border, img.width - 2 * border);
}

// ---------------------------------------------------------------------------
// Training pairs

// All planes are single-channel luminance in [0,1] except `target`, which in
// residual mode is hr - bicubic and may be negative.
struct TrainPair {
  ImagePlane lr;
  ImagePlane hr;
  ImagePlane bicubic;  // bicubic upscale of lr, hr-sized
  ImagePlane target;
  std::size_t scale = 2;
  bool residual = true;
};

struct PatchDefaults {
  std::size_t lr_size;
  std::size_t hr_size;
};

// LR / HR patch sizes for x2, x3 and x4.
inline PatchDefaults default_patch_size(std::size_t scale) {
  switch (scale) {
    case 2: return {18, 36};
    case 3: return {12, 36};
    case 4: return {21, 84};
    default: throw ConfigError("no default patch size for scale " + std::to_string(scale));
  }
}

inline TrainPair make_pair_from_hr(const ImagePlane& hr, std::size_t scale, bool residual) {
  if (hr.height % scale != 0 || hr.width % scale != 0)
    throw DataError("HR size " + std::to_string(hr.height) + "x" + std::to_string(hr.width) +
                    " is not divisible by scale " + std::to_string(scale));
  TrainPair p;
  p.scale = scale;
  p.residual = residual;
  p.hr = hr;
  p.lr = clamp_unit(bicubic_resize(hr, 1.0 / static_cast<double>(scale)));
  p.bicubic = clamp_unit(bicubic_resize(p.lr, static_cast<double>(scale)));
  p.target = residual ? subtract(hr, p.bicubic) : hr;
  return p;
}

struct PatchOrigin {
  std::size_t y = 0;  // HR coordinates
  std::size_t x = 0;
};

// Top-left HR corners of the patch grid, row-major.
inline std::vector<PatchOrigin> patch_grid(std::size_t height, std::size_t width, std::size_t scale,
                                           std::size_t lr_size, std::size_t stride) {
  if (scale < 1 || lr_size < 1 || stride < 1) throw ConfigError("patch_grid: sizes must be positive");
  const std::size_t p = lr_size * scale, step = stride * scale;
  if (p > height || p > width)
    throw DataError("image " + std::to_string(height) + "x" + std::to_string(width) + " smaller than one " +
                    std::to_string(p) + "x" + std::to_string(p) + " patch");
  std::vector<PatchOrigin> out;
  for (std::size_t y = 0; y + p <= height; y += step)
    for (std::size_t x = 0; x + p <= width; x += step) out.push_back({y, x});
  return out;
}

inline std::vector<TrainPair> extract_patches(const ImagePlane& hr, std::size_t scale, std::size_t lr_size,
                                              std::size_t stride, bool residual = true) {
  if (hr.channels != 1) throw DataError("extract_patches expects a luminance plane");
  const std::size_t p = lr_size * scale;
  std::vector<TrainPair> out;
  for (const auto& o : patch_grid(hr.height, hr.width, scale, lr_size, stride))
    out.push_back(make_pair_from_hr(hr.crop(o.y, o.x, p, p), scale, residual));
  return out;
}

// Places HR patches back at their origins. `coverage` counts how many
// patches wrote each pixel; overlapping writes are averaged.
struct Reassembly {
  ImagePlane image;
  std::vector<std::size_t> coverage;
};

inline Reassembly reassemble(const std::vector<ImagePlane>& patches, const std::vector<PatchOrigin>& origins,
                             std::size_t height, std::size_t width) {
  if (patches.size() != origins.size()) throw DataError("reassemble: patch and origin counts differ");
  Reassembly r{ImagePlane(height, width, 1), std::vector<std::size_t>(height * width, 0)};
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const auto& p = patches[i];
    if (origins[i].y + p.height > height || origins[i].x + p.width > width)
      throw DataError("reassemble: patch exceeds canvas");
    for (std::size_t y = 0; y < p.height; ++y)
      for (std::size_t x = 0; x < p.width; ++x) {
        r.image.at(0, origins[i].y + y, origins[i].x + x) += p.at(0, y, x);
        ++r.coverage[(origins[i].y + y) * width + origins[i].x + x];
      }
  }
  for (std::size_t i = 0; i < r.coverage.size(); ++i)
    if (r.coverage[i] > 1) r.image.data[i] /= static_cast<double>(r.coverage[i]);
  return r;
}

// Rotates by 90 degrees counter-clockwise `quarter_turns` times.
inline ImagePlane rotate90(const ImagePlane& img, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return img;
  const bool swap = k % 2 == 1;
  ImagePlane out(swap ? img.width : img.height, swap ? img.height : img.width, img.channels, img.space);
  out.range = img.range;
  const std::size_t h = img.height, w = img.width;
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double v = img.at(c, y, x);
        if (k == 1)
          out.at(c, w - 1 - x, y) = v;
        else if (k == 2)
          out.at(c, h - 1 - y, w - 1 - x) = v;
        else
          out.at(c, x, h - 1 - y) = v;
      }
  return out;
}

// Original plus 90, 180 and 270 degree rotations.
inline std::vector<TrainPair> augment_rotations(const TrainPair& pair) {
  if (pair.lr.height != pair.lr.width || pair.hr.height != pair.hr.width)
    throw DataError("augment_rotations: patches must be square");
  std::vector<TrainPair> out;
  for (int k = 0; k < 4; ++k) {
    TrainPair r = pair;
    r.lr = rotate90(pair.lr, k);
    r.hr = rotate90(pair.hr, k);
    r.bicubic = rotate90(pair.bicubic, k);
    r.target = rotate90(pair.target, k);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Network space. Inputs are 2x - 1; residual targets 2 (hr - bicubic), so
// that bicubic + residual maps to 2 hr - 1 under the same affine map.

template <typename T>
Tensor<T> network_input(const ImagePlane& lr) {
  return normalize(lr).to_tensor<T>();
}

template <typename T>
Tensor<T> network_target(const TrainPair& p) {
  Tensor<T> t = p.target.to_tensor<T>();
  for (auto& v : t.data()) v = p.residual ? T(2) * v : T(2) * v - T(1);
  return t;
}

// Maps a network output back to an HR image in [0,1] (clamped).
template <typename T>
ImagePlane reconstruct(const Tensor<T>& out, const ImagePlane& bicubic, bool residual, std::size_t batch = 0) {
  ImagePlane img = ImagePlane::from_tensor(out, batch);
  if (img.height != bicubic.height || img.width != bicubic.width)
    throw DataError("reconstruct: output and bicubic sizes differ");
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = residual ? bicubic.data[i] + img.data[i] / 2.0 : (img.data[i] + 1.0) / 2.0;
  return clamp_unit(img);
}

}  // namespace lcsc
