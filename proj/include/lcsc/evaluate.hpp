#pragma once

// Single-image super-resolution and per-image quality rows.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lcsc/metrics.hpp"
#include "lcsc/network.hpp"

namespace lcsc {

// LR luminance in [0,1] -> HR luminance in [0,1].
template <typename T>
ImagePlane super_resolve(const NetworkParams<T>& p, const NetworkConfig& cfg, const ImagePlane& lr) {
  if (lr.channels != cfg.in_channels)
    throw DataError("model expects " + std::to_string(cfg.in_channels) + " channel input, got " +
                    std::to_string(lr.channels));
  const ImagePlane bic = clamp_unit(bicubic_resize(lr, static_cast<double>(cfg.scale)));
  const Tensor<T> out = network_predict(p, cfg, network_input<T>(lr));
  return reconstruct(out, bic, cfg.residual_target);
}

// Colour images go through luminance; chroma is upscaled bicubically and
// recombined.
template <typename T>
ImagePlane super_resolve_color(const NetworkParams<T>& p, const NetworkConfig& cfg, const ImagePlane& lr) {
  if (lr.channels == 1 || cfg.in_channels == 3) return super_resolve(p, cfg, lr);
  if (lr.channels != 3) throw DataError("expected a 1 or 3 channel image");
  const ImagePlane ycc = rgb_to_ycbcr(lr);
  const ImagePlane y_hr = super_resolve(p, cfg, ycc.channel(0));
  ImagePlane ycc_hr = clamp_unit(bicubic_resize(ycc, static_cast<double>(cfg.scale)));
  for (std::size_t i = 0; i < y_hr.pixels(); ++i) ycc_hr.data[i] = y_hr.data[i];
  return clamp_unit(ycbcr_to_rgb(ycc_hr));
}

struct EvalRow {
  std::string name;
  double psnr = 0;
  double ssim = 0;
  double bicubic_psnr = 0;
  double bicubic_ssim = 0;
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  std::vector<std::string> skipped;
  EvalRow mean{"mean"};
};

inline ImagePlane downscale_lr(const ImagePlane& hr, std::size_t scale) {
  return clamp_unit(bicubic_resize(hr, 1.0 / static_cast<double>(scale)));
}

inline ImagePlane bicubic_baseline(const ImagePlane& hr, std::size_t scale) {
  return clamp_unit(bicubic_resize(downscale_lr(hr, scale), static_cast<double>(scale)));
}

// SSIM needs an 11x11 window after shaving; smaller images report NaN.
inline double ssim_or_nan(const ImagePlane& a, const ImagePlane& b, std::size_t shave_px) {
  if (a.height < 11 + 2 * shave_px || a.width < 11 + 2 * shave_px) return std::numeric_limits<double>::quiet_NaN();
  return ssim(a, b, shave_px);
}

// `sr` is the prediction for HR image `hr`; shave defaults to the scale.
inline EvalRow score(const std::string& name, const ImagePlane& sr, const ImagePlane& hr, std::size_t scale) {
  const ImagePlane bic = bicubic_baseline(hr, scale);
  return {name, psnr(sr, hr, scale), ssim_or_nan(sr, hr, scale), psnr(bic, hr, scale), ssim_or_nan(bic, hr, scale)};
}

inline void finish_summary(EvalSummary& s) {
  auto mean = [&](double EvalRow::*f) {
    double acc = 0;
    for (const auto& r : s.rows) acc += r.*f;
    return s.rows.empty() ? std::numeric_limits<double>::quiet_NaN() : acc / static_cast<double>(s.rows.size());
  };
  s.mean = {"mean", mean(&EvalRow::psnr), mean(&EvalRow::ssim), mean(&EvalRow::bicubic_psnr),
            mean(&EvalRow::bicubic_ssim)};
}

template <typename T>
EvalSummary evaluate(const NetworkParams<T>& p, const NetworkConfig& cfg,
                     const std::vector<std::pair<std::string, ImagePlane>>& images) {
  EvalSummary s;
  for (const auto& [name, hr] : images)
    s.rows.push_back(score(name, super_resolve(p, cfg, downscale_lr(hr, cfg.scale)), hr, cfg.scale));
  finish_summary(s);
  return s;
}

}  // namespace lcsc
