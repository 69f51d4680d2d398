#pragma once

// The LCSCNet family: linear-compressing skip-connection units and blocks,
// enhanced blocks, preliminary feature extraction, the shared upsampling and
// reconstruction head, and whole-network assembly.
//
// A unit keeps its width n: a 1x1 "linear compressing" branch carries n1
// compressed former features, a ReLU + 3x3 branch explores n2 new ones, and
// the two are concatenated (linear part first). rho = n2 / n.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lcsc/autograd.hpp"
#include "lcsc/fusion.hpp"

namespace lcsc {

enum class HeadKind { NearestStack, SubPixel };

inline std::string to_string(HeadKind h) { return h == HeadKind::NearestStack ? "nearest_stack" : "sub_pixel"; }

inline HeadKind parse_head(const std::string& s) {
  if (s == "nearest_stack") return HeadKind::NearestStack;
  if (s == "sub_pixel") return HeadKind::SubPixel;
  throw ConfigError("unknown head '" + s + "' (expected nearest_stack or sub_pixel)");
}

struct ChannelSplit {
  std::size_t linear = 0;     // n1
  std::size_t nonlinear = 0;  // n2
};

// Rejects rho values for which rho * width is not an integer.
inline ChannelSplit split_channels(std::size_t width, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho out of range [0,1]: " + std::to_string(rho));
  const double n2 = rho * static_cast<double>(width);
  const double rounded = std::round(n2);
  if (std::abs(n2 - rounded) > 1e-9)
    throw ConfigError("rho not integral: rho=" + std::to_string(rho) + " with width " + std::to_string(width) +
                      " gives " + std::to_string(n2) + " nonlinear channels");
  const auto nl = static_cast<std::size_t>(rounded);
  return {width - nl, nl};
}

struct NetworkConfig {
  std::size_t blocks = 1;           // N
  std::size_t units_per_block = 1;  // M
  std::size_t width = 64;           // n
  std::vector<double> rho{0.5};     // one entry per block
  bool enhanced = false;
  std::size_t scale = 2;
  HeadKind head = HeadKind::NearestStack;
  bool fusion = false;
  bool residual_target = true;
  std::size_t in_channels = 1;
  std::uint64_t seed = 1;

  void validate() const {
    if (blocks < 1) throw ConfigError("blocks must be >= 1");
    if (units_per_block < 1) throw ConfigError("units_per_block must be >= 1");
    if (width < 1) throw ConfigError("width must be >= 1");
    if (in_channels < 1) throw ConfigError("in_channels must be >= 1");
    if (scale < 2 || scale > 4) throw ConfigError("unsupported scale " + std::to_string(scale));
    if (rho.size() != blocks)
      throw ConfigError("rho list has " + std::to_string(rho.size()) + " entries for " + std::to_string(blocks) +
                        " blocks");
    for (double r : rho) split_channels(width, r);
  }

  ChannelSplit split(std::size_t block) const { return split_channels(width, rho.at(block)); }
  std::size_t outputs() const { return blocks; }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

template <typename T>
struct LCSCUnitParams {
  std::optional<ConvKernel<T>> k_l;   // 1x1, n -> n1 (absent when n1 == 0)
  std::optional<ConvKernel<T>> k_nl;  // 3x3, n -> n2 (absent when n2 == 0)

  std::size_t width() const {
    return k_l ? k_l->in_channels() : (k_nl ? k_nl->in_channels() : 0);
  }
  std::size_t out_width() const {
    return (k_l ? k_l->out_channels() : 0) + (k_nl ? k_nl->out_channels() : 0);
  }

  void validate() const {
    if (!k_l && !k_nl) throw ConfigError("LCSC unit has neither branch");
    if (k_l && (k_l->kh() != 1 || k_l->kw() != 1))
      throw ConfigError("LCSC linear branch must be 1x1, got " + k_l->weight.shape().str());
    if (k_nl && (k_nl->kh() != 3 || k_nl->kw() != 3))
      throw ConfigError("LCSC nonlinear branch must be 3x3, got " + k_nl->weight.shape().str());
    if (k_l && k_nl && k_l->in_channels() != k_nl->in_channels())
      throw ConfigError("LCSC branch input widths differ: " + k_l->weight.shape().str() + " vs " +
                        k_nl->weight.shape().str());
    if (out_width() != width())
      throw ConfigError("LCSC unit maps " + std::to_string(width()) + " channels to " + std::to_string(out_width()));
  }

  static LCSCUnitParams init(std::size_t width, ChannelSplit split, Rng& rng) {
    LCSCUnitParams u;
    if (split.linear > 0) u.k_l = ConvKernel<T>::he_uniform(split.linear, width, 1, rng);
    if (split.nonlinear > 0) u.k_nl = ConvKernel<T>::he_uniform(split.nonlinear, width, 3, rng);
    return u;
  }

  friend bool operator==(const LCSCUnitParams&, const LCSCUnitParams&) = default;
};

template <typename T>
struct BlockParams {
  std::vector<LCSCUnitParams<T>> units;
  std::optional<ConvKernel<T>> bottleneck;  // 1x1, 2n -> n, enhanced blocks only

  friend bool operator==(const BlockParams&, const BlockParams&) = default;
};

inline constexpr double kOutputInitScale = 0.01;

template <typename T>
struct HeadParams {
  HeadKind kind = HeadKind::NearestStack;
  std::size_t scale = 2;
  // NearestStack: three 3x3 convs n->n, n->n, n->c at HR.
  // SubPixel: n -> c*s^2 then shuffle; for s == 4 two stages n -> 4n, n -> 4c.
  std::vector<ConvKernel<T>> convs;

  static HeadParams init(HeadKind kind, std::size_t scale, std::size_t width, std::size_t out, Rng& rng) {
    HeadParams h;
    h.kind = kind;
    h.scale = scale;
    if (kind == HeadKind::NearestStack) {
      h.convs.push_back(ConvKernel<T>::he_uniform(width, width, 3, rng));
      h.convs.push_back(ConvKernel<T>::he_uniform(width, width, 3, rng));
      h.convs.push_back(ConvKernel<T>::he_uniform(out, width, 3, rng));
    } else if (scale == 4) {
      h.convs.push_back(ConvKernel<T>::he_uniform(4 * width, width, 3, rng));
      h.convs.push_back(ConvKernel<T>::he_uniform(4 * out, width, 3, rng));
    } else {
      h.convs.push_back(ConvKernel<T>::he_uniform(out * scale * scale, width, 3, rng));
    }
    // Residual targets are small; a full-scale output layer starts far from
    // them and L1 training then stalls at the all-zero prediction.
    for (auto& v : h.convs.back().weight.data()) v *= static_cast<T>(kOutputInitScale);
    return h;
  }

  friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

template <typename T>
struct NetworkParams {
  ConvKernel<T> pfe;  // 3x3, in_channels -> n
  std::vector<BlockParams<T>> blocks;
  HeadParams<T> head;  // one parameter set shared by every output
  FusionParams<T> fusion;

  // He-uniform kernels, zero biases, zero fusion gates.
  static NetworkParams init(const NetworkConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    NetworkParams p;
    p.pfe = ConvKernel<T>::he_uniform(cfg.width, cfg.in_channels, 3, rng);
    for (std::size_t d = 0; d < cfg.blocks; ++d) {
      BlockParams<T> b;
      for (std::size_t m = 0; m < cfg.units_per_block; ++m)
        b.units.push_back(LCSCUnitParams<T>::init(cfg.width, cfg.split(d), rng));
      if (cfg.enhanced) b.bottleneck = ConvKernel<T>::he_uniform(cfg.width, 2 * cfg.width, 1, rng);
      p.blocks.push_back(std::move(b));
    }
    p.head = HeadParams<T>::init(cfg.head, cfg.scale, cfg.width, cfg.in_channels, rng);
    if (cfg.fusion) p.fusion = FusionParams<T>::zeros(cfg.blocks, cfg.in_channels);
    return p;
  }

  // Same structure, every value zero. Used as a gradient accumulator.
  static NetworkParams zeros_like(const NetworkParams& o) {
    NetworkParams z = o;
    z.for_each([](const std::string&, Tensor<T>& t) { t.fill(T(0)); });
    return z;
  }

  // Visits every stored tensor in a fixed order. Checkpoints and the
  // optimizer rely on this order.
  template <typename F>
  void for_each(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Tensor<T>& t) { n += t.size(); });
    return n;
  }

  template <typename U>
  NetworkParams<U> cast() const {
    NetworkParams<U> out;
    out.pfe = pfe.template cast<U>();
    for (const auto& b : blocks) {
      BlockParams<U> nb;
      for (const auto& u : b.units) {
        LCSCUnitParams<U> nu;
        if (u.k_l) nu.k_l = u.k_l->template cast<U>();
        if (u.k_nl) nu.k_nl = u.k_nl->template cast<U>();
        nb.units.push_back(std::move(nu));
      }
      if (b.bottleneck) nb.bottleneck = b.bottleneck->template cast<U>();
      out.blocks.push_back(std::move(nb));
    }
    out.head.kind = head.kind;
    out.head.scale = head.scale;
    for (const auto& c : head.convs) out.head.convs.push_back(c.template cast<U>());
    out.fusion = fusion.template cast<U>();
    return out;
  }

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    auto kern = [&](const std::string& name, auto& k) {
      f(name + ".weight", k.weight);
      f(name + ".bias", k.bias);
    };
    kern(std::string("pfe"), self.pfe);
    for (std::size_t d = 0; d < self.blocks.size(); ++d) {
      auto& b = self.blocks[d];
      const std::string bn = "block" + std::to_string(d + 1);
      for (std::size_t m = 0; m < b.units.size(); ++m) {
        auto& u = b.units[m];
        const std::string un = bn + ".unit" + std::to_string(m + 1);
        if (u.k_l) kern(un + ".k_l", *u.k_l);
        if (u.k_nl) kern(un + ".k_nl", *u.k_nl);
      }
      if (b.bottleneck) kern(bn + ".bottleneck", *b.bottleneck);
    }
    for (std::size_t i = 0; i < self.head.convs.size(); ++i)
      kern("head.conv" + std::to_string(i + 1), self.head.convs[i]);
    for (std::size_t i = 0; i < self.fusion.gates.size(); ++i)
      kern("fusion.gate" + std::to_string(i + 1), self.fusion.gates[i]);
  }
};

// ---------------------------------------------------------------------------
// Tape-level building blocks

template <typename T>
struct UnitVars {
  std::optional<ConvVars<T>> k_l;
  std::optional<ConvVars<T>> k_nl;
};

template <typename T>
UnitVars<T> bind(Tape<T>& tape, const LCSCUnitParams<T>& u, LCSCUnitParams<T>* grads = nullptr) {
  UnitVars<T> v;
  if (u.k_l) v.k_l = bind(tape, *u.k_l, grads ? &*grads->k_l : nullptr);
  if (u.k_nl) v.k_nl = bind(tape, *u.k_nl, grads ? &*grads->k_nl : nullptr);
  return v;
}

template <typename T>
struct HeadVars {
  HeadKind kind = HeadKind::NearestStack;
  std::size_t scale = 2;
  std::vector<ConvVars<T>> convs;
};

template <typename T>
HeadVars<T> bind(Tape<T>& tape, const HeadParams<T>& h, HeadParams<T>* grads = nullptr) {
  HeadVars<T> v{h.kind, h.scale, {}};
  for (std::size_t i = 0; i < h.convs.size(); ++i)
    v.convs.push_back(bind(tape, h.convs[i], grads ? &grads->convs[i] : nullptr));
  return v;
}

namespace ag {

template <typename T>
Var<T> lcsc_unit(const UnitVars<T>& u, Var<T> y_in) {
  std::optional<Var<T>> lin, nonlin;
  if (u.k_l) lin = conv2d(y_in, *u.k_l, 0);
  if (u.k_nl) nonlin = conv2d(relu(y_in), *u.k_nl, 1);
  if (lin && nonlin) return concat_channels(*lin, *nonlin);
  return lin ? *lin : *nonlin;
}

template <typename T>
Var<T> lcsc_block(const std::vector<UnitVars<T>>& units, Var<T> f_in) {
  Var<T> y = f_in;
  for (const auto& u : units) y = lcsc_unit(u, y);
  return y;
}

template <typename T>
Var<T> e_lcsc_block(const std::vector<UnitVars<T>>& units, const ConvVars<T>& bottleneck, Var<T> f_in) {
  return conv2d(concat_channels(f_in, lcsc_block(units, f_in)), bottleneck, 0);
}

template <typename T>
Var<T> head(const HeadVars<T>& h, Var<T> f) {
  if (h.kind == HeadKind::NearestStack) {
    Var<T> x = nearest_upsample(f, h.scale);
    x = relu(conv2d(x, h.convs[0], 1));
    x = relu(conv2d(x, h.convs[1], 1));
    return conv2d(x, h.convs[2], 1);
  }
  if (h.scale == 4) {
    Var<T> x = pixel_shuffle(conv2d(f, h.convs[0], 1), 2);
    return pixel_shuffle(conv2d(x, h.convs[1], 1), 2);
  }
  return pixel_shuffle(conv2d(f, h.convs[0], 1), h.scale);
}

}  // namespace ag

template <typename T>
struct NetworkOutputs {
  std::vector<Var<T>> features;       // F_0 .. F_N
  std::vector<Var<T>> intermediates;  // Y_1 .. Y_N
  std::vector<Var<T>> alphas;         // fusion gates, when enabled
  Var<T> final;
};

namespace detail {
inline void check_width(const Shape& s, std::size_t width, const char* where) {
  if (s.c != width)
    throw ConfigError(std::string(where) + ": expected " + std::to_string(width) + " channels, got " + s.str());
}
}  // namespace detail

template <typename T>
void validate_params(const NetworkParams<T>& p, const NetworkConfig& cfg) {
  cfg.validate();
  if (p.pfe.weight.shape() != Shape{cfg.width, cfg.in_channels, 3, 3})
    throw ConfigError("pfe kernel shape " + p.pfe.weight.shape().str());
  if (p.blocks.size() != cfg.blocks) throw ConfigError("parameter block count does not match config");
  for (std::size_t d = 0; d < cfg.blocks; ++d) {
    const auto& b = p.blocks[d];
    if (b.units.size() != cfg.units_per_block) throw ConfigError("parameter unit count does not match config");
    const auto split = cfg.split(d);
    for (const auto& u : b.units) {
      u.validate();
      if (u.width() != cfg.width || (u.k_l ? u.k_l->out_channels() : 0) != split.linear)
        throw ConfigError("unit channel split does not match rho for block " + std::to_string(d + 1));
    }
    if (cfg.enhanced != b.bottleneck.has_value()) throw ConfigError("bottleneck presence does not match config");
    if (b.bottleneck && b.bottleneck->weight.shape() != Shape{cfg.width, 2 * cfg.width, 1, 1})
      throw ConfigError("bottleneck kernel shape " + b.bottleneck->weight.shape().str() + ", expected " +
                        Shape{cfg.width, 2 * cfg.width, 1, 1}.str());
  }
  if (p.head.kind != cfg.head || p.head.scale != cfg.scale) throw ConfigError("head does not match config");
  if (cfg.fusion)
    p.fusion.validate(cfg.blocks, cfg.in_channels);
  else if (!p.fusion.gates.empty())
    throw ConfigError("fusion gates present but fusion disabled");
}

// Full forward pass. With `grads`, every parameter becomes differentiable and
// backward() accumulates into the matching tensors of *grads.
// `all_outputs` = false skips Y_1..Y_{N-1} when fusion is off.
template <typename T>
NetworkOutputs<T> network_forward(Tape<T>& tape, const NetworkParams<T>& p, const NetworkConfig& cfg, Var<T> input,
                                  NetworkParams<T>* grads = nullptr, bool all_outputs = true) {
  detail::check_width(input.shape(), cfg.in_channels, "network input");
  NetworkOutputs<T> out;
  Var<T> f0 = ag::conv2d(input, bind(tape, p.pfe, grads ? &grads->pfe : nullptr), 1);
  out.features.push_back(f0);
  const HeadVars<T> head = bind(tape, p.head, grads ? &grads->head : nullptr);
  const bool need_all = all_outputs || cfg.fusion;
  Var<T> f = f0;
  for (std::size_t d = 0; d < cfg.blocks; ++d) {
    const auto& b = p.blocks[d];
    std::vector<UnitVars<T>> units;
    for (std::size_t m = 0; m < b.units.size(); ++m)
      units.push_back(bind(tape, b.units[m], grads ? &grads->blocks[d].units[m] : nullptr));
    if (b.bottleneck)
      f = ag::e_lcsc_block(units, bind(tape, *b.bottleneck, grads ? &*grads->blocks[d].bottleneck : nullptr), f);
    else
      f = ag::lcsc_block(units, f);
    detail::check_width(f.shape(), cfg.width, "block output");
    out.features.push_back(f);
    if (need_all || d + 1 == cfg.blocks) out.intermediates.push_back(ag::head(head, cfg.enhanced ? ag::add(f, f0) : f));
  }
  if (cfg.fusion) {
    std::vector<ConvVars<T>> gates;
    for (std::size_t i = 0; i < p.fusion.gates.size(); ++i)
      gates.push_back(bind(tape, p.fusion.gates[i], grads ? &grads->fusion.gates[i] : nullptr));
    auto fused = fuse(out.intermediates, gates);
    out.final = fused.fused;
    out.alphas = std::move(fused.alphas);
  } else {
    out.final = out.intermediates.back();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plain-tensor entry points

template <typename T>
Tensor<T> lcsc_unit_forward(const LCSCUnitParams<T>& params, const Tensor<T>& y_in) {
  params.validate();
  detail::check_width(y_in.shape(), params.width(), "lcsc unit input");
  Tape<T> tape;
  Var<T> y = ag::lcsc_unit(bind(tape, params), tape.constant(y_in));
  detail::check_width(y.shape(), params.width(), "lcsc unit output");
  return y.value();
}

template <typename T>
Tensor<T> lcsc_block_forward(const std::vector<LCSCUnitParams<T>>& units, const Tensor<T>& f_in) {
  if (units.empty()) throw ConfigError("lcsc block has no units");
  for (const auto& u : units) {
    u.validate();
    if (u.width() != units.front().width())
      throw ConfigError("inconsistent unit widths in block: " + std::to_string(u.width()) + " vs " +
                        std::to_string(units.front().width()));
  }
  detail::check_width(f_in.shape(), units.front().width(), "lcsc block input");
  Tape<T> tape;
  std::vector<UnitVars<T>> vars;
  for (const auto& u : units) vars.push_back(bind(tape, u));
  return ag::lcsc_block(vars, tape.constant(f_in)).value();
}

template <typename T>
Tensor<T> e_lcsc_block_forward(const std::vector<LCSCUnitParams<T>>& units, const ConvKernel<T>& bottleneck,
                               const Tensor<T>& f_in) {
  const std::size_t n = f_in.shape().c;
  bottleneck.validate();
  if (bottleneck.weight.shape() != Shape{n, 2 * n, 1, 1})
    throw ConfigError("bottleneck kernel shape " + bottleneck.weight.shape().str() + ", expected " +
                      Shape{n, 2 * n, 1, 1}.str());
  const Tensor<T> inner = lcsc_block_forward(units, f_in);
  return conv2d(concat_channels(f_in, inner), bottleneck, 0);
}

template <typename T>
Tensor<T> pfe_forward(const ConvKernel<T>& pfe, const Tensor<T>& i_in) {
  return conv2d(i_in, pfe, 1);
}

template <typename T>
Tensor<T> head_forward(const HeadParams<T>& head, const Tensor<T>& f) {
  if (head.scale < 2 || head.scale > 4) throw ConfigError("unsupported scale " + std::to_string(head.scale));
  if (head.convs.empty()) throw ConfigError("head has no kernels");
  detail::check_width(f.shape(), head.convs.front().in_channels(), "head input");
  Tape<T> tape;
  return ag::head(bind(tape, head), tape.constant(f)).value();
}

template <typename T>
struct ForwardResult {
  std::vector<Tensor<T>> features;
  std::vector<Tensor<T>> intermediates;
  Tensor<T> final;
};

template <typename T>
ForwardResult<T> network_forward(const NetworkParams<T>& p, const NetworkConfig& cfg, const Tensor<T>& input) {
  validate_params(p, cfg);
  Tape<T> tape;
  auto out = network_forward(tape, p, cfg, tape.constant(input));
  ForwardResult<T> r;
  for (const auto& f : out.features) r.features.push_back(f.value());
  for (const auto& y : out.intermediates) r.intermediates.push_back(y.value());
  r.final = out.final.value();
  return r;
}

// Super-resolves without keeping intermediates beyond what the output needs.
template <typename T>
Tensor<T> network_predict(const NetworkParams<T>& p, const NetworkConfig& cfg, const Tensor<T>& input) {
  Tape<T> tape;
  return network_forward(tape, p, cfg, tape.constant(input), static_cast<NetworkParams<T>*>(nullptr), false)
      .final.value();
}

// ---------------------------------------------------------------------------
// Linear-compressing identities

struct IdentityCheck {
  bool passed = false;
  double rel_error = 0.0;
  explicit operator bool() const { return passed; }
};

// Splitting a 1x1 kernel over n input channels into the part acting on the
// first n1 channels (K^{L,L}) and the part acting on the rest (K^{L,NL}):
// the full convolution equals the sum of the two block convolutions.
template <typename T>
IdentityCheck lc_decomposition_check(const ConvKernel<T>& k_l, const Tensor<T>& y, std::size_t n1,
                                     double tol = 1e-5) {
  const std::size_t n = y.shape().c;
  if (n1 > n) throw ConfigError("lc_decomposition_check: n1 exceeds channel count");
  const Tensor<T> full = conv2d(y, k_l, 0);
  const std::size_t out = k_l.out_channels();
  Tensor<T> sum(full.shape());
  for (std::size_t o = 0; o < out; ++o)
    for (std::size_t b = 0; b < y.shape().n; ++b) std::fill_n(sum.plane(b, o), sum.shape().plane(), k_l.bias[o]);
  auto part = [&](std::size_t begin, std::size_t count) {
    if (count == 0) return;
    ConvKernel<T> sub = ConvKernel<T>::zeros(out, count, 1);
    for (std::size_t o = 0; o < out; ++o)
      for (std::size_t i = 0; i < count; ++i) sub.weight.at(o, i, 0, 0) = k_l.weight.at(o, begin + i, 0, 0);
    sum += conv2d(slice_channels(y, begin, count), sub, 0);
  };
  part(0, n1);
  part(n1, n - n1);
  const double err = relative_error(full, sum);
  return {err <= tol, err};
}

// Chaining bias-free 1x1 linear parts equals one 1x1 convolution whose
// channel matrix is the ordered product K_k ... K_2 K_1.
template <typename T>
IdentityCheck linear_chain_product_check(const std::vector<ConvKernel<T>>& kernels, const Tensor<T>& y,
                                         double tol = 1e-5) {
  if (kernels.empty()) throw ConfigError("linear_chain_product_check: no kernels");
  Tensor<T> chained = y;
  for (const auto& k : kernels) {
    if (k.kh() != 1 || k.kw() != 1) throw ConfigError("linear_chain_product_check: kernels must be 1x1");
    if (max_abs(k.bias) != 0.0) throw ConfigError("linear_chain_product_check: biases must be zero");
    chained = conv2d(chained, k, 0);
  }
  // product = K_last * ... * K_first
  std::vector<double> prod;
  std::size_t rows = kernels.front().out_channels(), cols = kernels.front().in_channels();
  prod.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) prod[r * cols + c] = kernels.front().weight.at(r, c, 0, 0);
  for (std::size_t i = 1; i < kernels.size(); ++i) {
    const auto& k = kernels[i];
    if (k.in_channels() != rows) throw ConfigError("linear_chain_product_check: kernel widths do not chain");
    std::vector<double> next(k.out_channels() * cols, 0.0);
    for (std::size_t r = 0; r < k.out_channels(); ++r)
      for (std::size_t m = 0; m < rows; ++m) {
        const double a = k.weight.at(r, m, 0, 0);
        for (std::size_t c = 0; c < cols; ++c) next[r * cols + c] += a * prod[m * cols + c];
      }
    prod = std::move(next);
    rows = k.out_channels();
  }
  ConvKernel<T> single = ConvKernel<T>::zeros(rows, cols, 1);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) single.weight.at(r, c, 0, 0) = static_cast<T>(prod[r * cols + c]);
  const double err = relative_error(chained, conv2d(y, single, 0));
  return {err <= tol, err};
}

}  // namespace lcsc
