#include <gtest/gtest.h>

#include <chrono>
#include <set>

#include "lcsc/gradcheck.hpp"
#include "lcsc/network.hpp"
#include "oracles.hpp"

using namespace lcsc;

namespace {

Tensor<double> unit_oracle(const LCSCUnitParams<double>& u, const Tensor<double>& y) {
  if (!u.k_l) return oracle::same_conv(oracle::relu(y), *u.k_nl);
  if (!u.k_nl) return oracle::same_conv(y, *u.k_l);
  return oracle::concat(oracle::same_conv(y, *u.k_l), oracle::same_conv(oracle::relu(y), *u.k_nl));
}

NetworkConfig toy_config() {
  NetworkConfig cfg;
  cfg.blocks = 2;
  cfg.units_per_block = 2;
  cfg.width = 8;
  cfg.rho = {0.5, 0.5};
  cfg.enhanced = true;
  cfg.fusion = true;
  cfg.scale = 2;
  return cfg;
}

// Random values everywhere, including biases and fusion gates, so no
// parameter sits at a special point.
NetworkParams<double> randomized(const NetworkConfig& cfg, std::uint64_t seed) {
  auto p = NetworkParams<double>::init(cfg);
  Rng rng(seed);
  p.for_each([&](const std::string& name, Tensor<double>& t) {
    const double s = name.rfind("fusion", 0) == 0 ? 1.0 : 0.3;
    for (auto& v : t.data()) v = rng.uniform(-s, s);
  });
  return p;
}

}  // namespace

TEST(SplitChannels, IntegralSplits) {
  EXPECT_EQ(split_channels(64, 0.5).linear, 32u);
  EXPECT_EQ(split_channels(64, 0.75).nonlinear, 48u);
  EXPECT_EQ(split_channels(10, 0.3).nonlinear, 3u);
  EXPECT_EQ(split_channels(8, 0.0).nonlinear, 0u);
  EXPECT_EQ(split_channels(8, 1.0).linear, 0u);
}

TEST(SplitChannels, NonIntegralRejected) {
  try {
    split_channels(7, 0.5);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("rho not integral"), std::string::npos);
  }
  EXPECT_THROW(split_channels(8, 1.5), ConfigError);
  NetworkConfig cfg;
  cfg.width = 10;
  cfg.rho = {0.25};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(LCSCUnit, MatchesOracleAndKeepsWidth) {
  for (double rho : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    Rng rng(static_cast<std::uint64_t>(rho * 100));
    auto u = LCSCUnitParams<double>::init(8, split_channels(8, rho), rng);
    auto y = Tensor<double>::uniform(Shape{2, 8, 5, 4}, rng);
    auto out = lcsc_unit_forward(u, y);
    EXPECT_EQ(out.shape(), y.shape());
    EXPECT_LT(relative_error(out, unit_oracle(u, y)), 1e-6) << rho;
    EXPECT_EQ(u.k_l.has_value(), rho < 1.0);
    EXPECT_EQ(u.k_nl.has_value(), rho > 0.0);
  }
}

TEST(LCSCUnit, LinearChannelsComeFirst) {
  Rng rng(3);
  auto u = LCSCUnitParams<double>::init(4, split_channels(4, 0.5), rng);
  auto y = Tensor<double>::uniform(Shape{1, 4, 3, 3}, rng);
  auto out = lcsc_unit_forward(u, y);
  EXPECT_EQ(slice_channels(out, 0, 2), conv2d(y, *u.k_l, 0));
  EXPECT_EQ(slice_channels(out, 2, 2), conv2d(relu(y), *u.k_nl, 1));
}

TEST(LCSCUnit, ValidationErrors) {
  Rng rng(1);
  LCSCUnitParams<double> none;
  EXPECT_THROW(none.validate(), ConfigError);
  auto u = LCSCUnitParams<double>::init(8, split_channels(8, 0.5), rng);
  u.k_l = ConvKernel<double>::zeros(4, 8, 3);
  EXPECT_THROW(u.validate(), ConfigError);
  auto v = LCSCUnitParams<double>::init(8, split_channels(8, 0.5), rng);
  EXPECT_THROW(lcsc_unit_forward(v, Tensor<double>(Shape{1, 6, 3, 3})), ConfigError);
}

TEST(LCSCBlock, ChainsUnits) {
  Rng rng(5);
  std::vector<LCSCUnitParams<double>> units;
  for (int m = 0; m < 3; ++m) units.push_back(LCSCUnitParams<double>::init(6, split_channels(6, 0.5), rng));
  auto f = Tensor<double>::uniform(Shape{1, 6, 4, 4}, rng);
  Tensor<double> y = f;
  for (const auto& u : units) y = unit_oracle(u, y);
  EXPECT_LT(relative_error(lcsc_block_forward(units, f), y), 1e-6);

  units.push_back(LCSCUnitParams<double>::init(4, split_channels(4, 0.5), rng));
  EXPECT_THROW(lcsc_block_forward(units, f), ConfigError);
}

TEST(ELCSCBlock, ConcatenatesInputThenCompresses) {
  Rng rng(6);
  std::vector<LCSCUnitParams<double>> units;
  for (int m = 0; m < 2; ++m) units.push_back(LCSCUnitParams<double>::init(4, split_channels(4, 0.5), rng));
  auto bn = ConvKernel<double>::random(4, 8, 1, rng);
  auto f = Tensor<double>::uniform(Shape{1, 4, 3, 5}, rng);
  Tensor<double> inner = f;
  for (const auto& u : units) inner = unit_oracle(u, inner);
  auto expected = oracle::same_conv(oracle::concat(f, inner), bn);
  auto got = e_lcsc_block_forward(units, bn, f);
  EXPECT_EQ(got.shape(), f.shape());
  EXPECT_LT(relative_error(got, expected), 1e-6);
  EXPECT_THROW(e_lcsc_block_forward(units, ConvKernel<double>::zeros(4, 4, 1), f), ConfigError);
}

TEST(Head, OutputShapes) {
  for (auto kind : {HeadKind::NearestStack, HeadKind::SubPixel})
    for (std::size_t s : {2u, 3u, 4u}) {
      Rng rng(s);
      auto h = HeadParams<double>::init(kind, s, 4, 1, rng);
      auto y = head_forward(h, Tensor<double>::uniform(Shape{2, 4, 3, 5}, rng));
      EXPECT_EQ(y.shape(), (Shape{2, 1, 3 * s, 5 * s})) << to_string(kind) << s;
    }
}

TEST(Head, NearestStackMatchesOracle) {
  Rng rng(8);
  auto h = HeadParams<double>::init(HeadKind::NearestStack, 3, 4, 1, rng);
  auto f = Tensor<double>::uniform(Shape{1, 4, 3, 3}, rng);
  auto x = oracle::nearest(f, 3);
  x = oracle::relu(oracle::same_conv(x, h.convs[0]));
  x = oracle::relu(oracle::same_conv(x, h.convs[1]));
  x = oracle::same_conv(x, h.convs[2]);
  EXPECT_LT(relative_error(head_forward(h, f), x), 1e-6);
}

TEST(Head, SubPixelMatchesOracle) {
  Rng rng(9);
  auto h2 = HeadParams<double>::init(HeadKind::SubPixel, 2, 4, 1, rng);
  EXPECT_EQ(h2.convs.size(), 1u);
  EXPECT_EQ(h2.convs[0].out_channels(), 4u);
  auto f = Tensor<double>::uniform(Shape{1, 4, 3, 3}, rng);
  EXPECT_LT(relative_error(head_forward(h2, f), oracle::shuffle(oracle::same_conv(f, h2.convs[0]), 2)), 1e-6);

  auto h4 = HeadParams<double>::init(HeadKind::SubPixel, 4, 4, 1, rng);
  ASSERT_EQ(h4.convs.size(), 2u);
  EXPECT_EQ(h4.convs[0].out_channels(), 16u);
  EXPECT_EQ(h4.convs[1].out_channels(), 4u);
  auto stage = oracle::shuffle(oracle::same_conv(f, h4.convs[0]), 2);
  auto expected = oracle::shuffle(oracle::same_conv(stage, h4.convs[1]), 2);
  EXPECT_LT(relative_error(head_forward(h4, f), expected), 1e-6);
}

TEST(Network, EnhancedOutputsShareOneHead) {
  auto cfg = toy_config();
  cfg.blocks = 3;
  cfg.rho = {0.25, 0.5, 0.75};
  auto p = randomized(cfg, 4);
  Rng rng(2);
  auto x = Tensor<double>::uniform(Shape{1, 1, 5, 6}, rng, 0, 1);
  auto r = network_forward(p, cfg, x);
  ASSERT_EQ(r.features.size(), 4u);
  ASSERT_EQ(r.intermediates.size(), 3u);
  for (std::size_t d = 1; d <= 3; ++d) {
    auto y = head_forward(p.head, add(r.features[d], r.features[0]));
    EXPECT_LT(relative_error(r.intermediates[d - 1], y), 1e-12);
  }
  auto [fused, trace] = fuse(r.intermediates, p.fusion);
  EXPECT_LT(relative_error(r.final, fused), 1e-12);
  EXPECT_EQ(r.final.shape(), (Shape{1, 1, 10, 12}));
}

TEST(Network, PlainOutputWithoutFusion) {
  NetworkConfig cfg;
  cfg.blocks = 2;
  cfg.units_per_block = 2;
  cfg.width = 4;
  cfg.rho = {0.5, 0.5};
  cfg.scale = 3;
  cfg.head = HeadKind::SubPixel;
  auto p = NetworkParams<double>::init(cfg);
  EXPECT_TRUE(p.fusion.gates.empty());
  Rng rng(1);
  auto x = Tensor<double>::uniform(Shape{2, 1, 4, 4}, rng, 0, 1);
  auto r = network_forward(p, cfg, x);
  EXPECT_EQ(r.final, r.intermediates.back());
  EXPECT_EQ(r.final, head_forward(p.head, r.features.back()));
  EXPECT_EQ(network_predict(p, cfg, x), r.final);
}

TEST(Network, InitIsSeededAndGatesStartAtZero) {
  auto cfg = toy_config();
  auto a = NetworkParams<double>::init(cfg);
  EXPECT_EQ(a, NetworkParams<double>::init(cfg));
  cfg.seed = 2;
  EXPECT_NE(a, NetworkParams<double>::init(cfg));
  for (const auto& g : a.fusion.gates) {
    EXPECT_EQ(max_abs(g.weight), 0.0);
    EXPECT_EQ(max_abs(g.bias), 0.0);
  }
  EXPECT_EQ(max_abs(a.pfe.bias), 0.0);
}

TEST(Network, ParameterWalkOrderAndCount) {
  auto cfg = toy_config();
  auto p = NetworkParams<double>::init(cfg);
  std::vector<std::string> names;
  std::size_t total = 0;
  p.for_each([&](const std::string& n, const Tensor<double>& t) {
    names.push_back(n);
    total += t.size();
  });
  EXPECT_EQ(total, p.param_count());
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), names.size());
  ASSERT_FALSE(names.empty());
  EXPECT_EQ(names.front(), "pfe.weight");
  EXPECT_EQ(names[2], "block1.unit1.k_l.weight");
  EXPECT_EQ(names.back(), "fusion.gate1.bias");
  // pfe 8*9+8, per unit 4*8+4 + 4*8*9+4, bottleneck 8*16+8, head 2*(64*9+8) + 8*9+1, gate 2+1
  const std::size_t expected = 80 + 4 * (36 + 292) + 2 * 136 + 2 * 584 + 73 + 3;
  EXPECT_EQ(p.param_count(), expected);
}

TEST(Network, ValidateParamsCatchesMismatch) {
  auto cfg = toy_config();
  auto p = NetworkParams<double>::init(cfg);
  EXPECT_NO_THROW(validate_params(p, cfg));
  auto q = p;
  q.blocks[0].bottleneck.reset();
  EXPECT_THROW(validate_params(q, cfg), ConfigError);
  auto other = cfg;
  other.rho = {0.25, 0.5};
  EXPECT_THROW(validate_params(p, other), ConfigError);
  EXPECT_THROW(network_forward(p, cfg, Tensor<double>(Shape{1, 3, 4, 4})), ConfigError);
}

TEST(Network, CastRoundTrip) {
  auto p = NetworkParams<float>::init(toy_config());
  EXPECT_EQ(p.cast<double>().cast<float>(), p);
}

TEST(Network, ToyGradientCheck) {
  const auto start = std::chrono::steady_clock::now();
  auto cfg = toy_config();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto p = randomized(cfg, seed);
    Rng rng(seed + 1000);
    auto x = Tensor<double>::uniform(Shape{1, 1, 4, 4}, rng, 0, 1);
    auto target = Tensor<double>::uniform(Shape{1, 1, 8, 8}, rng, -1, 1);
    auto r = network_gradcheck(p, cfg, x, [&](Tape<double>& t, const NetworkOutputs<double>& o) {
      auto acc = ag::sum(ag::mul(o.final, t.constant(target)));
      for (const auto& y : o.intermediates) acc = ag::add(acc, ag::sum(ag::mul(y, t.constant(target))));
      return acc;
    });
    EXPECT_LT(r.rel_error, 1e-5) << "seed " << seed;
    EXPECT_GT(r.analytic_norm, 0.0);
    worst = std::max(worst, r.rel_error);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(secs, 60.0);
  RecordProperty("worst_rel_error", std::to_string(worst));
}

TEST(Degenerate, RhoZeroStackIsLinear) {
  // rho = 0 removes every nonlinear branch; with zero biases the feature
  // stack is a linear map and obeys superposition.
  NetworkConfig cfg;
  cfg.blocks = 4;
  cfg.units_per_block = 3;
  cfg.width = 6;
  cfg.rho = {0, 0, 0, 0};
  cfg.enhanced = true;
  EXPECT_NO_THROW(cfg.validate());
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = NetworkParams<double>::init(cfg);
    p.for_each([](const std::string& name, Tensor<double>& t) {
      if (name.ends_with(".bias")) t.fill(0);
    });
    for (const auto& b : p.blocks)
      for (const auto& u : b.units) ASSERT_FALSE(u.k_nl.has_value());
    auto x = Tensor<double>::uniform(Shape{1, 1, 5, 5}, rng);
    auto y = Tensor<double>::uniform(Shape{1, 1, 5, 5}, rng);
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    auto feat = [&](const Tensor<double>& in) { return network_forward(p, cfg, in).features.back(); };
    auto lhs = feat(add(scale(x, a), scale(y, b)));
    auto rhs = add(scale(feat(x), a), scale(feat(y), b));
    EXPECT_LT(relative_error(lhs, rhs), 1e-5);
  }
}

TEST(Degenerate, RhoOneHasNoLinearBranch) {
  NetworkConfig cfg;
  cfg.blocks = 2;
  cfg.units_per_block = 2;
  cfg.width = 4;
  cfg.rho = {1.0, 1.0};
  auto p = NetworkParams<double>::init(cfg);
  for (const auto& b : p.blocks)
    for (const auto& u : b.units) {
      EXPECT_FALSE(u.k_l.has_value());
      EXPECT_TRUE(u.k_nl.has_value());
    }
  Rng rng(3);
  auto x = Tensor<double>::uniform(Shape{1, 1, 4, 4}, rng, 0, 1);
  auto r = network_gradcheck(p, cfg, x, [](Tape<double>&, const NetworkOutputs<double>& o) {
    return ag::sum(ag::mul(o.final, o.final));
  });
  EXPECT_LT(r.rel_error, 1e-5);
}

TEST(LCDecomposition, BlockSplitIdentity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + rng.below(15);
    const std::size_t n1 = rng.below(n + 1);
    auto k = ConvKernel<double>::random(1 + rng.below(8), n, 1, rng);
    auto y = Tensor<double>::uniform(Shape{1, n, 4, 4}, rng);
    auto r = lc_decomposition_check(k, y, n1);
    EXPECT_TRUE(r) << r.rel_error;
    auto rf = lc_decomposition_check(k.cast<float>(), y.cast<float>(), n1);
    EXPECT_TRUE(rf) << rf.rel_error;
  }
}

TEST(LCDecomposition, ChainProductIdentity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<ConvKernel<float>> chain;
    std::size_t width = 2 + rng.below(10);
    const std::size_t in = width;
    for (std::size_t i = 0, len = 2 + rng.below(6); i < len; ++i) {
      const std::size_t next = 2 + rng.below(10);
      auto k = ConvKernel<float>::random(next, width, 1, rng, 0.5);
      k.bias.fill(0);
      chain.push_back(k);
      width = next;
    }
    auto y = Tensor<float>::uniform(Shape{1, in, 3, 3}, rng);
    auto r = linear_chain_product_check(chain, y);
    EXPECT_TRUE(r) << r.rel_error;
  }
  Rng rng(1);
  std::vector<ConvKernel<double>> biased{ConvKernel<double>::random(2, 2, 1, rng)};
  EXPECT_THROW(linear_chain_product_check(biased, Tensor<double>(Shape{1, 2, 2, 2})), ConfigError);
}
