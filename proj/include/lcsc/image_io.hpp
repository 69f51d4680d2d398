#pragma once

// 8-bit raster I/O (PNG through libpng, binary PGM/PPM) and dataset
// discovery from a manifest file or a directory tree.

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lcsc/image.hpp"

namespace lcsc {

namespace fs = std::filesystem;

namespace detail {

inline std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

inline ImagePlane from_interleaved(const std::vector<unsigned char>& px, std::size_t h, std::size_t w,
                                   std::size_t c) {
  ImagePlane img(h, w, c, c == 3 ? ColorSpace::RGB : ColorSpace::LuminanceY);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t k = 0; k < c; ++k) img.at(k, y, x) = px[(y * w + x) * c + k] / 255.0;
  return img;
}

inline std::vector<unsigned char> to_interleaved(const ImagePlane& img) {
  std::vector<unsigned char> px(img.height * img.width * img.channels);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t k = 0; k < img.channels; ++k) {
        const double v = std::clamp(img.at(k, y, x), 0.0, 1.0);
        px[(y * img.width + x) * img.channels + k] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
  return px;
}

inline ImagePlane read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw DataError("cannot read PNG " + path.string() + ": " + image.message);
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t c = color ? 3 : 1;
  std::vector<unsigned char> px(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, px.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return from_interleaved(px, image.height, image.width, c);
}

inline void write_png(const ImagePlane& img, const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const auto px = to_interleaved(img);
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, px.data(), 0, nullptr))
    throw DataError("cannot write PNG " + path.string() + ": " + image.message);
}

inline void skip_pnm_space(std::istream& in) {
  while (true) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      return;
    }
  }
}

inline ImagePlane read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") throw DataError(path.string() + ": unsupported PNM type '" + magic + "'");
  std::size_t w = 0, h = 0, maxval = 0;
  skip_pnm_space(in);
  in >> w;
  skip_pnm_space(in);
  in >> h;
  skip_pnm_space(in);
  in >> maxval;
  in.get();
  if (!in || w == 0 || h == 0 || maxval != 255) throw DataError(path.string() + ": bad or non-8-bit PNM header");
  const std::size_t c = magic == "P6" ? 3 : 1;
  std::vector<unsigned char> px(w * h * c);
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (in.gcount() != static_cast<std::streamsize>(px.size())) throw DataError(path.string() + ": truncated PNM data");
  return from_interleaved(px, h, w, c);
}

inline void write_pnm(const ImagePlane& img, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << (img.channels == 3 ? "P6" : "P5") << "\n" << img.width << " " << img.height << "\n255\n";
  const auto px = to_interleaved(img);
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace detail

inline bool is_image_file(const fs::path& p) {
  const auto e = detail::lower_ext(p);
  return e == ".png" || e == ".pgm" || e == ".ppm";
}

// Decodes to [0,1]. Grey and RGB are kept as is; alpha is dropped.
inline ImagePlane read_image(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("image not found: " + path.string());
  const auto e = detail::lower_ext(path);
  if (e == ".png") return detail::read_png(path);
  if (e == ".pgm" || e == ".ppm") return detail::read_pnm(path);
  throw DataError("unsupported image format: " + path.string());
}

// Writes 8-bit values, clamping to [0,1] first. Signed planes are mapped
// back from [-1,1].
inline void write_image(const ImagePlane& img, const fs::path& path) {
  if (img.channels != 1 && img.channels != 3)
    throw DataError("write_image supports 1 or 3 channels, got " + std::to_string(img.channels));
  const ImagePlane unit = img.range == Range::Signed ? denormalize(img) : img;
  const auto e = detail::lower_ext(path);
  if (e == ".png")
    detail::write_png(unit, path);
  else if (e == ".pgm" || e == ".ppm")
    detail::write_pnm(unit, path);
  else
    throw DataError("unsupported image format: " + path.string());
}

// Luminance in [0,1] whatever the file holds.
inline ImagePlane read_luminance(const fs::path& path) {
  ImagePlane img = read_image(path);
  return img.channels == 3 ? to_luminance(img) : img;
}

struct DatasetEntry {
  std::string split;  // "train" or "val"
  fs::path path;
};

// One entry per line: "<split> <path>", split being train or val. Blank lines
// and lines starting with '#' are skipped; relative paths resolve against
// the manifest's directory.
inline std::vector<DatasetEntry> read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open manifest " + manifest.string());
  std::vector<DatasetEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string split, rest;
    if (!(ss >> split) || split.front() == '#') continue;
    std::getline(ss >> std::ws, rest);
    if (split != "train" && split != "val")
      throw DataError(manifest.string() + ":" + std::to_string(lineno) + ": split must be train or val, got '" +
                      split + "'");
    if (rest.empty()) throw DataError(manifest.string() + ":" + std::to_string(lineno) + ": missing path");
    fs::path p(rest);
    if (p.is_relative()) p = manifest.parent_path() / p;
    out.push_back({split, p});
  }
  return out;
}

// Every image file under `dir`, sorted by path.
inline std::vector<fs::path> scan_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace lcsc
