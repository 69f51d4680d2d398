#pragma once

// Writes fusion weight maps W_k as 8-bit grayscale images, [0,1] -> [0,255].

#include <string>
#include <vector>

#include "lcsc/fusion.hpp"
#include "lcsc/image_io.hpp"

namespace lcsc {

// One file per output k (and per channel when there are several), named
// <prefix><k>.png or <prefix><k>_c<c>.png, batch element 0. Returns the paths.
template <typename T>
std::vector<fs::path> export_weight_maps(const FusionTrace<T>& trace, const fs::path& dir,
                                         const std::string& prefix = "weight_") {
  if (trace.weights.empty()) throw DataError("export_weight_maps: trace has no weights");
  fs::create_directories(dir);
  std::vector<fs::path> written;
  for (std::size_t k = 0; k < trace.weights.size(); ++k) {
    const ImagePlane all = ImagePlane::from_tensor(trace.weights[k]);
    for (std::size_t c = 0; c < all.channels; ++c) {
      std::string name = prefix + std::to_string(k + 1);
      if (all.channels > 1) name += "_c" + std::to_string(c + 1);
      const fs::path p = dir / (name + ".png");
      write_image(all.channel(c), p);
      written.push_back(p);
    }
  }
  return written;
}

}  // namespace lcsc
