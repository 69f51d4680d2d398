#pragma once

// ResNet and DenseNet building blocks used as comparison baselines, and the
// weight-level transformations that take a DenseBlock towards LCSC units.
//
// Nonlinear mappings are pre-activation throughout: f(x) = K3(ReLU(x)). A
// dense unit with a bottleneck B applies the activation first, then B, then
// the 3x3 kernel: f(x) = K3(B(ReLU(x))).

#include <optional>
#include <string>
#include <vector>

#include "lcsc/network.hpp"
#include "lcsc/primitives.hpp"

namespace lcsc {

template <typename T>
struct ResBlockParams {
  ConvKernel<T> conv1;  // 3x3, n -> n
  ConvKernel<T> conv2;  // 3x3, n -> n

  static ResBlockParams init(std::size_t width, Rng& rng) {
    return {ConvKernel<T>::he_uniform(width, width, 3, rng), ConvKernel<T>::he_uniform(width, width, 3, rng)};
  }

  std::size_t width() const { return conv1.in_channels(); }

  void validate() const {
    conv1.validate();
    conv2.validate();
    const std::size_t n = width();
    if (conv1.weight.shape() != Shape{n, n, 3, 3} || conv2.weight.shape() != Shape{n, n, 3, 3})
      throw ConfigError("res block kernels must be 3x3 n->n, got " + conv1.weight.shape().str() + " and " +
                        conv2.weight.shape().str());
  }

  std::size_t param_count(bool with_bias) const {
    return conv1.param_count(with_bias) + conv2.param_count(with_bias);
  }
};

// y + conv2(relu(conv1(relu(y))))
template <typename T>
Tensor<T> resblock_forward(const ResBlockParams<T>& p, const Tensor<T>& y) {
  p.validate();
  detail::check_width(y.shape(), p.width(), "res block input");
  return add(y, conv2d(relu(conv2d(relu(y), p.conv1, 1)), p.conv2, 1));
}

template <typename T>
struct DenseUnitParams {
  ConvKernel<T> nl;                         // 3x3, (b or input width) -> k0
  std::optional<ConvKernel<T>> bottleneck;  // 1x1, input width -> b

  std::size_t in_width() const { return bottleneck ? bottleneck->in_channels() : nl.in_channels(); }
  std::size_t growth() const { return nl.out_channels(); }

  void validate() const {
    nl.validate();
    if (nl.kh() != 3) throw ConfigError("dense unit nonlinear kernel must be 3x3, got " + nl.weight.shape().str());
    if (bottleneck) {
      bottleneck->validate();
      if (bottleneck->kh() != 1) throw ConfigError("dense unit bottleneck must be 1x1");
      if (bottleneck->out_channels() != nl.in_channels())
        throw ConfigError("dense unit bottleneck outputs " + std::to_string(bottleneck->out_channels()) +
                          " channels, nonlinear kernel expects " + std::to_string(nl.in_channels()));
    }
  }

  std::size_t param_count(bool with_bias) const {
    return nl.param_count(with_bias) + (bottleneck ? bottleneck->param_count(with_bias) : 0);
  }
};

// concat(y', f(y')); the output is k0 channels wider than the input.
template <typename T>
Tensor<T> dense_unit_forward(const DenseUnitParams<T>& p, const Tensor<T>& y) {
  p.validate();
  detail::check_width(y.shape(), p.in_width(), "dense unit input");
  Tensor<T> x = relu(y);
  if (p.bottleneck) x = conv2d(x, *p.bottleneck, 0);
  return concat_channels(y, conv2d(x, p.nl, 1));
}

// A DenseBlock in adjacent-skip form: units applied in sequence, each input
// being the concatenation of everything before it, plus an optional 1x1
// transition (or compressing) layer at the end.
template <typename T>
struct DenseBlockParams {
  std::vector<DenseUnitParams<T>> units;
  std::optional<ConvKernel<T>> transition;

  std::size_t param_count(bool with_bias) const {
    std::size_t n = transition ? transition->param_count(with_bias) : 0;
    for (const auto& u : units) n += u.param_count(with_bias);
    return n;
  }
};

template <typename T>
Tensor<T> dense_block_forward(const DenseBlockParams<T>& block, const Tensor<T>& y0) {
  Tensor<T> y = y0;
  for (const auto& u : block.units) y = dense_unit_forward(u, y);
  if (block.transition) y = conv2d(y, *block.transition, 0);
  return y;
}

// Unit widths k, k + k0, k + 2 k0, ...; bottleneck width b when given.
template <typename T>
DenseBlockParams<T> make_dense_block(std::size_t k, std::size_t k0, std::size_t units, std::optional<std::size_t> b,
                                     std::optional<std::size_t> transition_out, Rng& rng) {
  DenseBlockParams<T> block;
  for (std::size_t p = 0; p < units; ++p) {
    const std::size_t in = k + p * k0;
    DenseUnitParams<T> u;
    if (b) u.bottleneck = ConvKernel<T>::he_uniform(*b, in, 1, rng);
    u.nl = ConvKernel<T>::he_uniform(k0, b ? *b : in, 3, rng);
    block.units.push_back(std::move(u));
  }
  if (transition_out) block.transition = ConvKernel<T>::he_uniform(*transition_out, k + units * k0, 1, rng);
  return block;
}

// ---------------------------------------------------------------------------
// Original DenseBlock: every unit owns one 3x3 kernel per earlier feature
// Y_0 .. Y_{i-1} and sums their responses, Y_i = sum_j K_ij(ReLU(Y_j)) + b_i.
// The block emits concat(Y_0, ..., Y_U).

template <typename T>
struct DenseUnitA {
  std::vector<ConvKernel<T>> per_source;  // bias of every entry must be zero
  Tensor<T> bias;                         // (1, k0, 1, 1)
};

template <typename T>
struct DenseBlockA {
  std::size_t k = 0;
  std::size_t k0 = 0;
  std::vector<DenseUnitA<T>> units;

  static DenseBlockA random(std::size_t k, std::size_t k0, std::size_t n_units, Rng& rng) {
    DenseBlockA a{k, k0, {}};
    for (std::size_t i = 0; i < n_units; ++i) {
      DenseUnitA<T> u;
      for (std::size_t j = 0; j <= i; ++j) {
        auto kern = ConvKernel<T>::random(k0, j == 0 ? k : k0, 3, rng, 0.3);
        kern.bias.fill(T(0));
        u.per_source.push_back(std::move(kern));
      }
      u.bias = Tensor<T>::uniform(Shape{1, k0, 1, 1}, rng, -0.3, 0.3);
      a.units.push_back(std::move(u));
    }
    return a;
  }

  void validate() const {
    for (std::size_t i = 0; i < units.size(); ++i) {
      const auto& u = units[i];
      if (u.per_source.size() != i + 1)
        throw ConfigError("dense unit " + std::to_string(i + 1) + " needs " + std::to_string(i + 1) +
                          " source kernels, got " + std::to_string(u.per_source.size()));
      if (u.bias.shape() != Shape{1, k0, 1, 1}) throw ConfigError("dense unit bias shape " + u.bias.shape().str());
      for (std::size_t j = 0; j <= i; ++j) {
        const auto& kern = u.per_source[j];
        if (kern.weight.shape() != Shape{k0, j == 0 ? k : k0, 3, 3})
          throw ConfigError("dense source kernel shape " + kern.weight.shape().str());
        if (max_abs(kern.bias) != 0.0) throw ConfigError("dense source kernels carry no bias of their own");
      }
    }
  }
};

template <typename T>
Tensor<T> dense_block_a_forward(const DenseBlockA<T>& a, const Tensor<T>& y0) {
  a.validate();
  detail::check_width(y0.shape(), a.k, "dense block input");
  std::vector<Tensor<T>> feats{y0};
  for (const auto& u : a.units) {
    Tensor<T> acc(Shape{y0.shape().n, a.k0, y0.shape().h, y0.shape().w});
    for (std::size_t c = 0; c < a.k0; ++c)
      for (std::size_t b = 0; b < y0.shape().n; ++b) std::fill_n(acc.plane(b, c), acc.shape().plane(), u.bias[c]);
    for (std::size_t j = 0; j < feats.size(); ++j) acc += conv2d(relu(feats[j]), u.per_source[j], 1);
    feats.push_back(std::move(acc));
  }
  Tensor<T> out = feats.front();
  for (std::size_t j = 1; j < feats.size(); ++j) out = concat_channels(out, feats[j]);
  return out;
}

// Stacks each unit's per-source kernels along the input-channel axis in
// source order, matching the running concatenation of the adjacent-skip form.
template <typename T>
DenseBlockParams<T> equivalence_a_to_b(const DenseBlockA<T>& a) {
  a.validate();
  DenseBlockParams<T> b;
  for (std::size_t i = 0; i < a.units.size(); ++i) {
    const auto& u = a.units[i];
    const std::size_t in = a.k + i * a.k0;
    auto nl = ConvKernel<T>::zeros(a.k0, in, 3);
    std::size_t offset = 0;
    for (const auto& src : u.per_source) {
      for (std::size_t o = 0; o < a.k0; ++o)
        for (std::size_t c = 0; c < src.in_channels(); ++c)
          for (std::size_t y = 0; y < 3; ++y)
            for (std::size_t x = 0; x < 3; ++x) nl.weight.at(o, offset + c, y, x) = src.weight.at(o, c, y, x);
      offset += src.in_channels();
    }
    nl.bias = u.bias;
    b.units.push_back(DenseUnitParams<T>{std::move(nl), std::nullopt});
  }
  return b;
}

// ---------------------------------------------------------------------------
// Moved-bottleneck unit: the bottleneck B (k -> b) sits before the
// concatenation, X' = concat(B X, K3(B(ReLU X))), keeping the width at
// k = b + k0 and the per-unit parameter count constant.

template <typename T>
struct MovedBottleneckUnit {
  ConvKernel<T> bottleneck;  // 1x1, k -> b
  ConvKernel<T> nl;          // 3x3, b -> k0

  std::size_t width() const { return bottleneck.in_channels(); }

  void validate() const {
    bottleneck.validate();
    nl.validate();
    if (bottleneck.kh() != 1 || nl.kh() != 3) throw ConfigError("moved-bottleneck unit needs a 1x1 and a 3x3 kernel");
    if (nl.in_channels() != bottleneck.out_channels())
      throw ConfigError("moved-bottleneck widths do not chain: " + bottleneck.weight.shape().str() + " then " +
                        nl.weight.shape().str());
  }

  std::size_t param_count(bool with_bias) const {
    return bottleneck.param_count(with_bias) + nl.param_count(with_bias);
  }
};

template <typename T>
Tensor<T> moved_bottleneck_forward(const std::vector<MovedBottleneckUnit<T>>& units, const Tensor<T>& x0) {
  Tensor<T> x = x0;
  for (const auto& u : units) {
    u.validate();
    detail::check_width(x.shape(), u.width(), "moved-bottleneck unit input");
    Tensor<T> lin = conv2d(x, u.bottleneck, 0);
    Tensor<T> nonlin = conv2d(conv2d(relu(x), u.bottleneck, 0), u.nl, 1);
    x = concat_channels(lin, nonlin);
  }
  return x;
}

// Splits each moved-bottleneck unit over the two branches: K^L = B and
// K^NL = K3 o B folded into a single 3x3 kernel on ReLU(X). The fold is exact
// only when B has no bias (a bias would be zero-padded differently at the
// border), so a nonzero bias is rejected.
template <typename T>
std::vector<LCSCUnitParams<T>> equivalence_d_to_e(const std::vector<MovedBottleneckUnit<T>>& units) {
  std::vector<LCSCUnitParams<T>> out;
  for (std::size_t p = 0; p < units.size(); ++p) {
    const auto& u = units[p];
    u.validate();
    const std::size_t k = u.width(), b = u.bottleneck.out_channels(), k0 = u.nl.out_channels();
    if (k != b + k0)
      throw ConfigError("unit " + std::to_string(p + 1) + ": width " + std::to_string(k) + " != b + k0 = " +
                        std::to_string(b) + " + " + std::to_string(k0));
    if (max_abs(u.bottleneck.bias) != 0.0)
      throw ConfigError("unit " + std::to_string(p + 1) + ": bottleneck bias must be zero to fold into the 3x3 kernel");
    auto nl = ConvKernel<T>::zeros(k0, k, 3);
    for (std::size_t o = 0; o < k0; ++o)
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t y = 0; y < 3; ++y)
          for (std::size_t x = 0; x < 3; ++x) {
            double acc = 0;
            for (std::size_t m = 0; m < b; ++m)
              acc += static_cast<double>(u.nl.weight.at(o, m, y, x)) * u.bottleneck.weight.at(m, i, 0, 0);
            nl.weight.at(o, i, y, x) = static_cast<T>(acc);
          }
    nl.bias = u.nl.bias;
    LCSCUnitParams<T> lcsc;
    if (b > 0) lcsc.k_l = u.bottleneck;
    if (k0 > 0) lcsc.k_nl = std::move(nl);
    out.push_back(std::move(lcsc));
  }
  return out;
}

// Moves every bottleneck of a B-DenseBlock in front of its concatenation by
// keeping only the columns acting on the first k input channels. This changes
// the function; only shapes carry over.
template <typename T>
std::vector<MovedBottleneckUnit<T>> relocate_bottlenecks(const DenseBlockParams<T>& c) {
  if (c.units.empty()) throw ConfigError("relocate_bottlenecks: empty block");
  const std::size_t k = c.units.front().in_width();
  std::vector<MovedBottleneckUnit<T>> out;
  for (const auto& u : c.units) {
    u.validate();
    if (!u.bottleneck) throw ConfigError("relocate_bottlenecks: unit has no bottleneck");
    const std::size_t b = u.bottleneck->out_channels();
    auto moved = ConvKernel<T>::zeros(b, k, 1);
    for (std::size_t o = 0; o < b; ++o)
      for (std::size_t i = 0; i < k; ++i) moved.weight.at(o, i, 0, 0) = u.bottleneck->weight.at(o, i, 0, 0);
    moved.bias = u.bottleneck->bias;
    out.push_back(MovedBottleneckUnit<T>{std::move(moved), u.nl});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Equal-depth comparison networks at a common width n. The LCSC core uses
// rho = 0.5; DenseNets use growth rate n/2 with bottleneck width n. BC-Dense
// splits the units over `bc_blocks` blocks, each closed by a compressing
// layer back to n channels. B-Dense ends with a transition layer to n.

template <typename T>
struct ComparisonSuite {
  std::size_t width = 0;
  std::size_t depth = 0;
  std::vector<LCSCUnitParams<T>> lcsc;
  std::vector<ResBlockParams<T>> resnet;
  DenseBlockParams<T> b_dense;
  std::vector<DenseBlockParams<T>> bc_dense;
};

struct SuiteCounts {
  std::size_t lcsc = 0;
  std::size_t bc_dense = 0;
  std::size_t resnet = 0;
  std::size_t b_dense = 0;
};

template <typename T>
ComparisonSuite<T> build_comparison_suite(std::size_t width, std::size_t depth, std::size_t bc_blocks = 3,
                                          std::uint64_t seed = 1) {
  if (width < 2 || width % 2 != 0) throw ConfigError("comparison suite width must be even, got " + std::to_string(width));
  if (depth < 2 || depth % 2 != 0)
    throw ConfigError("comparison suite depth must be even (two convs per res block), got " + std::to_string(depth));
  if (bc_blocks < 1 || depth % bc_blocks != 0)
    throw ConfigError("depth " + std::to_string(depth) + " does not divide into " + std::to_string(bc_blocks) +
                      " BC-Dense blocks");
  Rng rng(seed);
  ComparisonSuite<T> s;
  s.width = width;
  s.depth = depth;
  const std::size_t g = width / 2;
  for (std::size_t i = 0; i < depth; ++i) s.lcsc.push_back(LCSCUnitParams<T>::init(width, split_channels(width, 0.5), rng));
  for (std::size_t i = 0; i < depth / 2; ++i) s.resnet.push_back(ResBlockParams<T>::init(width, rng));
  s.b_dense = make_dense_block<T>(width, g, depth, width, width, rng);
  for (std::size_t i = 0; i < bc_blocks; ++i)
    s.bc_dense.push_back(make_dense_block<T>(width, g, depth / bc_blocks, width, width, rng));
  return s;
}

// Counts from the stored tensors of each network.
template <typename T>
SuiteCounts suite_param_counts(const ComparisonSuite<T>& s, bool with_bias = false) {
  SuiteCounts c;
  for (const auto& u : s.lcsc) {
    if (u.k_l) c.lcsc += u.k_l->param_count(with_bias);
    if (u.k_nl) c.lcsc += u.k_nl->param_count(with_bias);
  }
  for (const auto& r : s.resnet) c.resnet += r.param_count(with_bias);
  c.b_dense = s.b_dense.param_count(with_bias);
  for (const auto& b : s.bc_dense) c.bc_dense += b.param_count(with_bias);
  return c;
}

}  // namespace lcsc
