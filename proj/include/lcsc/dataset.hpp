#pragma once

// Training and validation sets built from a manifest or an image directory.

#include <filesystem>
#include <string>
#include <vector>

#include "lcsc/image_io.hpp"

namespace lcsc {

struct DataConfig {
  std::string root;        // image directory, scanned recursively (all images train)
  std::string manifest;    // or a manifest with train/val entries; takes precedence
  std::string val_dir;     // optional extra validation directory
  std::size_t patch_size = 0;  // LR patch side; 0 picks the per-scale default
  std::size_t stride = 0;      // LR stride; 0 means patch_size (no overlap)
  bool augment = false;        // add the three rotations of every patch
  std::size_t max_patches = 0; // 0 keeps all; otherwise a seeded subset

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct NamedImage {
  std::string name;
  ImagePlane image;  // luminance, cropped to a multiple of the scale
};

struct Dataset {
  std::vector<TrainPair> train;
  std::vector<NamedImage> val;
  std::size_t train_images = 0;
};

// Largest top-left crop whose sides are multiples of scale.
inline ImagePlane crop_to_scale(const ImagePlane& img, std::size_t scale) {
  const std::size_t h = img.height - img.height % scale, w = img.width - img.width % scale;
  if (h == 0 || w == 0) throw DataError("image smaller than the scale factor");
  return img.crop(0, 0, h, w);
}

inline Dataset load_dataset(const DataConfig& cfg, std::size_t scale, bool residual, std::uint64_t seed) {
  std::vector<fs::path> train_paths, val_paths;
  if (!cfg.manifest.empty()) {
    for (const auto& e : read_manifest(cfg.manifest)) (e.split == "train" ? train_paths : val_paths).push_back(e.path);
  } else if (!cfg.root.empty()) {
    train_paths = scan_images(cfg.root);
  } else {
    throw ConfigError("data: set either manifest or root");
  }
  if (!cfg.val_dir.empty())
    for (const auto& p : scan_images(cfg.val_dir)) val_paths.push_back(p);
  if (train_paths.empty()) throw DataError("empty training set");

  const std::size_t lr_size = cfg.patch_size ? cfg.patch_size : default_patch_size(scale).lr_size;
  const std::size_t stride = cfg.stride ? cfg.stride : lr_size;
  Dataset ds;
  for (const auto& p : train_paths) {
    const ImagePlane hr = crop_to_scale(read_luminance(p), scale);
    for (auto& pair : extract_patches(hr, scale, lr_size, stride, residual)) {
      if (cfg.augment)
        for (auto& r : augment_rotations(pair)) ds.train.push_back(std::move(r));
      else
        ds.train.push_back(std::move(pair));
    }
    ++ds.train_images;
  }
  if (ds.train.empty()) throw DataError("no training patches extracted");
  if (cfg.max_patches && ds.train.size() > cfg.max_patches) {
    Rng rng(seed ^ 0x5eed5eedull);
    for (std::size_t i = ds.train.size() - 1; i > 0; --i) std::swap(ds.train[i], ds.train[rng.below(i + 1)]);
    ds.train.resize(cfg.max_patches);
  }
  for (const auto& p : val_paths) ds.val.push_back({p.filename().string(), crop_to_scale(read_luminance(p), scale)});
  return ds;
}

}  // namespace lcsc
