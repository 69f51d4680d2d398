#pragma once

// Parameter and Mult&Adds accounting. A multiply-accumulate counts as one
// operation; a layer costs (weights + biases) x (positions it runs at), with
// LR-space layers running at HR pixels / scale^2.

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcsc/network.hpp"

namespace lcsc {

enum class Space { LR, Mid, HR };  // Mid: after the first x2 of a x4 sub-pixel head

struct LayerSpec {
  std::string name;
  std::string group;  // breakdown line the layer is reported under
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t k = 1;
  Space space = Space::LR;
  std::size_t runs = 1;  // applications per forward pass

  std::size_t params(bool with_bias) const { return out * in * k * k + (with_bias ? out : 0); }
};

struct CostLine {
  std::string label;
  std::size_t params = 0;
  std::uint64_t mult_adds = 0;
};

struct CostReport {
  std::vector<CostLine> lines;
  std::size_t params = 0;
  std::uint64_t mult_adds = 0;
  std::size_t hr_height = 720;
  std::size_t hr_width = 1280;
  bool with_bias = true;
};

inline std::uint64_t positions(Space s, std::size_t scale, std::size_t hr_h, std::size_t hr_w) {
  const std::uint64_t hr = static_cast<std::uint64_t>(hr_h) * hr_w;
  switch (s) {
    case Space::HR: return hr;
    case Space::Mid: return hr / 4;
    default: return hr / (static_cast<std::uint64_t>(scale) * scale);
  }
}

// Every convolution of the network, in forward order. The shared head
// appears once under "head"; when fusion needs every intermediate output the
// extra applications appear under "head reuse" with zero parameters.
inline std::vector<LayerSpec> layer_specs(const NetworkConfig& cfg) {
  cfg.validate();
  std::vector<LayerSpec> out;
  const std::size_t n = cfg.width, c = cfg.in_channels;
  out.push_back({"pfe", "pfe", c, n, 3, Space::LR, 1});
  for (std::size_t d = 0; d < cfg.blocks; ++d) {
    const std::string g = "block" + std::to_string(d + 1);
    const auto split = cfg.split(d);
    for (std::size_t m = 0; m < cfg.units_per_block; ++m) {
      const std::string u = g + ".unit" + std::to_string(m + 1);
      if (split.linear) out.push_back({u + ".k_l", g, n, split.linear, 1, Space::LR, 1});
      if (split.nonlinear) out.push_back({u + ".k_nl", g, n, split.nonlinear, 3, Space::LR, 1});
    }
    if (cfg.enhanced) out.push_back({g + ".bottleneck", g, 2 * n, n, 1, Space::LR, 1});
  }
  std::vector<LayerSpec> head;
  if (cfg.head == HeadKind::NearestStack) {
    head.push_back({"head.conv1", "head", n, n, 3, Space::HR, 1});
    head.push_back({"head.conv2", "head", n, n, 3, Space::HR, 1});
    head.push_back({"head.conv3", "head", n, c, 3, Space::HR, 1});
  } else if (cfg.scale == 4) {
    head.push_back({"head.conv1", "head", n, 4 * n, 3, Space::LR, 1});
    head.push_back({"head.conv2", "head", n, 4 * c, 3, Space::Mid, 1});
  } else {
    head.push_back({"head.conv1", "head", n, c * cfg.scale * cfg.scale, 3, Space::LR, 1});
  }
  for (const auto& h : head) out.push_back(h);
  if (cfg.fusion && cfg.blocks > 1) {
    for (auto h : head) {
      h.name += ".reuse";
      h.group = "head reuse";
      h.runs = cfg.blocks - 1;
      out.push_back(h);
    }
    for (std::size_t i = 0; i + 1 < cfg.blocks; ++i)
      out.push_back({"fusion.gate" + std::to_string(i + 1), "fusion gates", 2 * c, c, 1, Space::HR, 1});
  }
  return out;
}

inline CostReport cost_report(const std::vector<LayerSpec>& layers, std::size_t scale, std::size_t hr_h = 720,
                              std::size_t hr_w = 1280, bool with_bias = true) {
  CostReport r;
  r.hr_height = hr_h;
  r.hr_width = hr_w;
  r.with_bias = with_bias;
  for (const auto& l : layers) {
    const bool reuse = l.name.ends_with(".reuse");
    const std::size_t p = reuse ? 0 : l.params(with_bias);
    const std::uint64_t ops =
        static_cast<std::uint64_t>(l.params(with_bias)) * positions(l.space, scale, hr_h, hr_w) * l.runs;
    auto it = std::find_if(r.lines.begin(), r.lines.end(), [&](const CostLine& c) { return c.label == l.group; });
    if (it == r.lines.end()) {
      r.lines.push_back({l.group, 0, 0});
      it = std::prev(r.lines.end());
    }
    it->params += p;
    it->mult_adds += ops;
    r.params += p;
    r.mult_adds += ops;
  }
  return r;
}

inline CostReport cost_report(const NetworkConfig& cfg, std::size_t hr_h = 720, std::size_t hr_w = 1280,
                              bool with_bias = true) {
  return cost_report(layer_specs(cfg), cfg.scale, hr_h, hr_w, with_bias);
}

inline CostReport count_params(const NetworkConfig& cfg, bool with_bias = true) {
  return cost_report(cfg, 720, 1280, with_bias);
}

inline std::uint64_t mult_adds(const NetworkConfig& cfg, std::size_t hr_h = 720, std::size_t hr_w = 1280) {
  return cost_report(cfg, hr_h, hr_w, true).mult_adds;
}

// A plain stack of 3x3 convolutions run entirely at HR resolution:
// in -> width, (layers - 2) x width -> width, width -> in.
inline std::vector<LayerSpec> plain_conv_stack(std::size_t layers, std::size_t width, std::size_t in = 1) {
  if (layers < 2) throw ConfigError("plain conv stack needs at least 2 layers");
  std::vector<LayerSpec> out;
  for (std::size_t i = 0; i < layers; ++i) {
    const std::size_t ci = i == 0 ? in : width, co = i + 1 == layers ? in : width;
    out.push_back({"conv" + std::to_string(i + 1), "convs", ci, co, 3, Space::HR, 1});
  }
  return out;
}

// LCSC unit versus a plain k x k layer of the same width: rho + (1 - rho) / k^2.
inline double param_ratio_lr(double rho, std::size_t k) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("param_ratio_lr: rho must be in [0,1]");
  if (k < 1) throw ConfigError("param_ratio_lr: k must be >= 1");
  const double k2 = static_cast<double>(k * k);
  return rho + (1.0 - rho) / k2;
}

// L-layer LCSC stack versus an L-unit bottleneck DenseNet with matching
// n1, n2 and k: 2 / (2k^2 + L + 1) * (1/rho + k^2 / (1 - rho)).
inline double param_ratio_ld(double layers, double rho, std::size_t k) {
  if (!(layers >= 1.0)) throw ConfigError("param_ratio_ld: L must be >= 1");
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("param_ratio_ld: rho must be strictly between 0 and 1");
  if (k < 1) throw ConfigError("param_ratio_ld: k must be >= 1");
  const double k2 = static_cast<double>(k * k);
  return 2.0 / (2.0 * k2 + layers + 1.0) * (1.0 / rho + k2 / (1.0 - rho));
}

// DenseNet split into `blocks` equal blocks: the per-block depth L / N
// replaces L.
inline double param_ratio_ld_blockwise(std::size_t layers, std::size_t blocks, double rho, std::size_t k) {
  if (blocks < 1) throw ConfigError("param_ratio_ld_blockwise: blocks must be >= 1");
  return param_ratio_ld(static_cast<double>(layers) / static_cast<double>(blocks), rho, k);
}

inline std::string format_giga(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(1) << static_cast<double>(v) / 1e9 << "G";
  return ss.str();
}

inline std::string format_kilo(std::size_t v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(1) << static_cast<double>(v) / 1e3 << "K";
  return ss.str();
}

inline std::string render_table(const CostReport& r) {
  std::size_t w = 5;
  for (const auto& l : r.lines) w = std::max(w, l.label.size());
  std::ostringstream ss;
  ss << std::left << std::setw(static_cast<int>(w)) << "part" << "  " << std::right << std::setw(12) << "params"
     << "  " << std::setw(16) << "mult_adds" << "  " << std::setw(9) << "" << "\n";
  auto row = [&](const std::string& label, std::size_t p, std::uint64_t m) {
    ss << std::left << std::setw(static_cast<int>(w)) << label << "  " << std::right << std::setw(12) << p << "  "
       << std::setw(16) << m << "  " << std::setw(9) << format_giga(m) << "\n";
  };
  for (const auto& l : r.lines) row(l.label, l.params, l.mult_adds);
  row("total", r.params, r.mult_adds);
  ss << "HR " << r.hr_width << "x" << r.hr_height << ", bias " << (r.with_bias ? "included" : "excluded") << "\n";
  return ss.str();
}

inline nlohmann::json to_json(const CostReport& r) {
  nlohmann::json j;
  j["params"] = r.params;
  j["mult_adds"] = r.mult_adds;
  j["hr_size"] = {r.hr_width, r.hr_height};
  j["with_bias"] = r.with_bias;
  j["breakdown"] = nlohmann::json::array();
  for (const auto& l : r.lines) j["breakdown"].push_back({{"part", l.label}, {"params", l.params}, {"mult_adds", l.mult_adds}});
  return j;
}

}  // namespace lcsc
