#pragma once

// Named verification suites. Each check reports what it measured against
// its tolerance; callers print them as aligned text or JSON lines.

#include <chrono>
#include <ctime>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcsc/accounting.hpp"
#include "lcsc/gradcheck.hpp"
#include "lcsc/reference_archs.hpp"
#include "lcsc/synthetic.hpp"
#include "lcsc/training.hpp"

namespace lcsc {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  double measured = 0;
  double tolerance = 0;
  std::string detail;
};

inline nlohmann::json to_json(const CheckResult& r) {
  return {{"suite", r.suite},       {"check", r.name},         {"passed", r.passed},
          {"measured", r.measured}, {"tolerance", r.tolerance}, {"detail", r.detail}};
}

namespace verify {

inline CheckResult below(std::string suite, std::string name, double measured, double tol, std::string detail = {}) {
  return {std::move(suite), std::move(name), measured < tol, measured, tol, std::move(detail)};
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// gradient

inline constexpr double kGradTol = 1e-5;
inline constexpr int kGradSeeds = 20;

inline Var<double> project(Var<double> y, std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  auto r = Tensor<double>::uniform(y.shape(), rng, -1, 1);
  return ag::sum(ag::mul(y, y.tape->constant(r)));
}

inline Tensor<double> away_from_zero(Shape s, Rng& rng) {
  Tensor<double> t(s);
  for (auto& v : t.data()) v = (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.05, 1.0);
  return t;
}

// Worst relative error over the seeds; a vanishing analytic gradient counts
// as a failure.
inline CheckResult seeded_gradcheck(const std::string& name,
                                    const std::function<std::pair<LossBuilder, std::vector<Tensor<double>>>(
                                        std::uint64_t)>& make) {
  double worst = 0;
  bool nonzero = true;
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    auto [loss, inputs] = make(static_cast<std::uint64_t>(seed));
    const auto r = gradcheck(loss, inputs);
    worst = std::max(worst, r.rel_error);
    nonzero = nonzero && r.analytic_norm > 0;
  }
  auto c = below("gradient", name, worst, kGradTol, std::to_string(kGradSeeds) + " seeds");
  c.passed = c.passed && nonzero;
  return c;
}

inline NetworkConfig toy_network() {
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

inline NetworkParams<double> randomized(const NetworkConfig& cfg, std::uint64_t seed) {
  auto p = NetworkParams<double>::init(cfg);
  Rng rng(seed);
  p.for_each([&](const std::string& name, Tensor<double>& t) {
    const double s = name.rfind("fusion", 0) == 0 ? 1.0 : 0.3;
    for (auto& v : t.data()) v = rng.uniform(-s, s);
  });
  return p;
}

inline std::vector<CheckResult> gradient_suite() {
  using In = std::vector<Tensor<double>>;
  using V = const std::vector<Var<double>>&;
  std::vector<CheckResult> out;
  const auto t0 = std::chrono::steady_clock::now();
  out.push_back(seeded_gradcheck("conv3x3", [](std::uint64_t s) {
    Rng rng(s);
    auto x = Tensor<double>::uniform(Shape{2, 3, 4, 5}, rng);
    auto k = ConvKernel<double>::random(4, 3, 3, rng);
    return std::pair{LossBuilder([s](Tape<double>&, V v) {
                       return project(ag::conv2d(v[0], ConvVars<double>{v[1], v[2]}, 1), s);
                     }),
                     In{x, k.weight, k.bias}};
  }));
  out.push_back(seeded_gradcheck("conv1x1_valid", [](std::uint64_t s) {
    Rng rng(100 + s);
    auto x = Tensor<double>::uniform(Shape{1, 3, 5, 5}, rng);
    auto k1 = ConvKernel<double>::random(2, 3, 1, rng);
    auto k3 = ConvKernel<double>::random(2, 2, 3, rng);
    return std::pair{LossBuilder([s](Tape<double>&, V v) {
                       auto y = ag::conv2d(v[0], ConvVars<double>{v[1], v[2]}, 0);
                       return project(ag::conv2d(y, ConvVars<double>{v[3], v[4]}, 0), s);
                     }),
                     In{x, k1.weight, k1.bias, k3.weight, k3.bias}};
  }));
  out.push_back(seeded_gradcheck("relu", [](std::uint64_t s) {
    Rng rng(200 + s);
    return std::pair{LossBuilder([s](Tape<double>&, V v) { return project(ag::relu(v[0]), s); }),
                     In{away_from_zero(Shape{2, 3, 4, 4}, rng)}};
  }));
  out.push_back(seeded_gradcheck("sigmoid", [](std::uint64_t s) {
    Rng rng(300 + s);
    return std::pair{LossBuilder([s](Tape<double>&, V v) { return project(ag::sigmoid(v[0]), s); }),
                     In{Tensor<double>::uniform(Shape{1, 3, 4, 4}, rng, -4, 4)}};
  }));
  out.push_back(seeded_gradcheck("concat_slice", [](std::uint64_t s) {
    Rng rng(400 + s);
    return std::pair{LossBuilder([s](Tape<double>&, V v) {
                       return project(ag::slice_channels(ag::concat_channels(v[0], v[1]), 1, 3), s);
                     }),
                     In{Tensor<double>::uniform(Shape{2, 2, 3, 3}, rng), Tensor<double>::uniform(Shape{2, 3, 3, 3}, rng)}};
  }));
  out.push_back(seeded_gradcheck("nearest_upsample", [](std::uint64_t s) {
    Rng rng(500 + s);
    const std::size_t f = 2 + s % 3;
    return std::pair{LossBuilder([s, f](Tape<double>&, V v) { return project(ag::nearest_upsample(v[0], f), s); }),
                     In{Tensor<double>::uniform(Shape{1, 2, 3, 2}, rng)}};
  }));
  out.push_back(seeded_gradcheck("pixel_shuffle", [](std::uint64_t s) {
    Rng rng(600 + s);
    const std::size_t r = s % 2 ? 2 : 3;
    return std::pair{LossBuilder([s, r](Tape<double>&, V v) { return project(ag::pixel_shuffle(v[0], r), s); }),
                     In{Tensor<double>::uniform(Shape{1, 2 * r * r, 2, 3}, rng)}};
  }));
  out.push_back(seeded_gradcheck("elementwise", [](std::uint64_t s) {
    Rng rng(700 + s);
    const Shape sh{1, 2, 3, 3};
    return std::pair{LossBuilder([s](Tape<double>&, V v) {
                       auto c = ag::mul(ag::add(v[0], v[1]), ag::one_minus(ag::sub(v[1], v[2])));
                       return project(ag::scale(c, 0.7), s);
                     }),
                     In{Tensor<double>::uniform(sh, rng), Tensor<double>::uniform(sh, rng),
                        Tensor<double>::uniform(sh, rng)}};
  }));
  out.push_back(seeded_gradcheck("l1_loss", [](std::uint64_t s) {
    Rng rng(800 + s);
    auto target = Tensor<double>::uniform(Shape{2, 1, 4, 4}, rng);
    auto pred = target;
    for (auto& v : pred.data()) v += (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.01, 0.5);
    return std::pair{LossBuilder([](Tape<double>&, V v) { return ag::l1_loss(v[0], v[1]); }), In{pred, target}};
  }));

  // Whole network: every parameter, through the fusion and every output.
  const auto cfg = toy_network();
  double worst = 0;
  bool nonzero = true;
  for (std::uint64_t seed = 1; seed <= kGradSeeds; ++seed) {
    auto p = randomized(cfg, seed);
    Rng rng(seed + 1000);
    auto x = Tensor<double>::uniform(Shape{1, 1, 4, 4}, rng, 0, 1);
    auto target = Tensor<double>::uniform(Shape{1, 1, 8, 8}, rng, -1, 1);
    auto r = network_gradcheck(p, cfg, x, [&](Tape<double>& t, const NetworkOutputs<double>& o) {
      auto acc = ag::sum(ag::mul(o.final, t.constant(target)));
      for (const auto& y : o.intermediates) acc = ag::add(acc, ag::sum(ag::mul(y, t.constant(target))));
      return acc;
    });
    worst = std::max(worst, r.rel_error);
    nonzero = nonzero && r.analytic_norm > 0;
  }
  auto net = below("gradient", "toy_network", worst, kGradTol, "N=2 M=2 n=8, fusion and enhanced blocks, 20 seeds");
  net.passed = net.passed && nonzero;
  out.push_back(net);
  out.push_back(below("gradient", "runtime_seconds", seconds_since(t0), 60.0));
  return out;
}

// ---------------------------------------------------------------------------
// fusion

inline std::vector<CheckResult> fusion_suite() {
  double sum_err = 0, range_err = 0, envelope_err = 0, progressive_err = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    NetworkConfig cfg;
    cfg.blocks = 2 + rng.below(3);
    cfg.units_per_block = 1 + rng.below(2);
    cfg.width = 4;
    cfg.rho.assign(cfg.blocks, 0.5);
    cfg.fusion = true;
    cfg.enhanced = rng.below(2) == 1;
    cfg.seed = seed + 1;
    auto p = NetworkParams<double>::init(cfg);
    for (auto& g : p.fusion.gates) g = ConvKernel<double>::random(1, 2, 1, rng, 3.0);
    auto x = Tensor<double>::uniform(Shape{1, 1, 5, 5}, rng, 0, 1);
    const auto fwd = network_forward(p, cfg, x);
    const auto [fused, trace] = fuse(fwd.intermediates, p.fusion);
    progressive_err = std::max(progressive_err, max_abs_diff(fused, fwd.final));
    Tensor<double> weighted(fused.shape());
    Tensor<double> wsum(fused.shape());
    for (std::size_t k = 0; k < trace.weights.size(); ++k) {
      const auto& w = trace.weights[k];
      for (std::size_t j = 0; j < w.size(); ++j) {
        range_err = std::max({range_err, -w[j], w[j] - 1.0});
        wsum[j] += w[j];
        weighted[j] += w[j] * fwd.intermediates[k][j];
      }
    }
    for (std::size_t j = 0; j < fused.size(); ++j) {
      sum_err = std::max(sum_err, std::abs(wsum[j] - 1.0));
      double lo = fwd.intermediates[0][j], hi = lo;
      for (const auto& y : fwd.intermediates) {
        lo = std::min(lo, y[j]);
        hi = std::max(hi, y[j]);
      }
      envelope_err = std::max({envelope_err, lo - fused[j], fused[j] - hi});
    }
    progressive_err = std::max(progressive_err, max_abs_diff(fused, weighted));
  }
  const std::string d = "30 random networks, 2-4 outputs";
  return {below("fusion", "weights_sum_to_one", sum_err, 1e-6, d),
          {"fusion", "weights_in_unit_interval", range_err <= 0.0, range_err, 0.0, d},
          below("fusion", "within_envelope", std::max(envelope_err, 0.0), 1e-6, d),
          below("fusion", "progressive_equals_weighted_sum", progressive_err, 1e-6, d)};
}

// ---------------------------------------------------------------------------
// fig4: adjacent-skip and moved-bottleneck rewrites

inline std::vector<CheckResult> fig4_suite() {
  double ab = 0, de = 0;
  for (std::size_t width : {2u, 8u, 16u, 32u}) {
    Rng rng(width);
    auto a = DenseBlockA<double>::random(width, width / 2, 3, rng);
    auto b = equivalence_a_to_b(a);
    for (int trial = 0; trial < 20; ++trial) {
      auto y = Tensor<double>::uniform(Shape{1, width, 5, 5}, rng);
      ab = std::max(ab, relative_error(dense_block_a_forward(a, y), dense_block_forward(b, y)));
    }
    Rng rng2(100 + width);
    std::vector<MovedBottleneckUnit<double>> d;
    for (int p = 0; p < 3; ++p) {
      auto bk = ConvKernel<double>::random(width - width / 2, width, 1, rng2, 0.4);
      bk.bias.fill(0);
      d.push_back({bk, ConvKernel<double>::random(width / 2, width - width / 2, 3, rng2, 0.4)});
    }
    auto e = equivalence_d_to_e(d);
    for (int trial = 0; trial < 20; ++trial) {
      auto x = Tensor<double>::uniform(Shape{1, width, 5, 5}, rng2);
      de = std::max(de, relative_error(moved_bottleneck_forward(d, x), lcsc_block_forward(e, x)));
    }
  }
  const std::string d = "widths 2/8/16/32, 3 units, 20 inputs each";
  return {below("fig4", "a_to_b", ab, 1e-6, d), below("fig4", "d_to_e", de, 1e-6, d)};
}

// ---------------------------------------------------------------------------
// lc: linear-compressing identities

inline std::vector<CheckResult> lc_suite() {
  double split = 0, chain = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + rng.below(15);
    const std::size_t n1 = rng.below(n + 1);
    auto k = ConvKernel<double>::random(1 + rng.below(8), n, 1, rng);
    auto y = Tensor<double>::uniform(Shape{1, n, 4, 4}, rng);
    split = std::max(split, lc_decomposition_check(k, y, n1).rel_error);

    std::vector<ConvKernel<double>> ks;
    std::size_t width = 2 + rng.below(10);
    const std::size_t in = width;
    for (std::size_t i = 0, len = 2 + rng.below(6); i < len; ++i) {
      const std::size_t next = 2 + rng.below(10);
      auto kk = ConvKernel<double>::random(next, width, 1, rng, 0.5);
      kk.bias.fill(0);
      ks.push_back(kk);
      width = next;
    }
    chain = std::max(chain, linear_chain_product_check(ks, Tensor<double>::uniform(Shape{1, in, 3, 3}, rng)).rel_error);
  }
  return {below("lc", "block_split", split, 1e-5, "20 random instances"),
          below("lc", "chain_product", chain, 1e-5, "20 random instances")};
}

// ---------------------------------------------------------------------------
// accounting

inline std::vector<CheckResult> accounting_suite() {
  std::vector<CheckResult> out;
  const double lr = param_ratio_lr(0.5, 3);
  out.push_back({"accounting", "p_lr(0.5,3)=0.5556", std::abs(lr - 0.5556) < 5e-5, lr, 0.5556, "rounded to 4 places"});
  out.push_back(below("accounting", "p_lr(0.5,3)<0.557", lr, 0.557));

  double worst_step = -1;
  for (double rho : {0.125, 0.25, 0.5, 0.75, 0.875})
    for (std::size_t k : {1u, 3u, 5u})
      for (std::size_t L = 2; L <= 200; ++L)
        worst_step = std::max(worst_step, param_ratio_ld(static_cast<double>(L), rho, k) -
                                              param_ratio_ld(static_cast<double>(L - 1), rho, k));
  out.push_back({"accounting", "p_ld_monotone_decreasing", worst_step < 0, worst_step, 0.0, "max p(L)-p(L-1)"});

  // Counting oracles, bias off.
  double lr_err = 0;
  for (std::size_t n : {8u, 16u, 64u})
    for (std::size_t n2 = 0; n2 <= n; n2 += n / 8) {
      NetworkConfig c;
      c.width = n;
      c.rho = {static_cast<double>(n2) / static_cast<double>(n)};
      std::size_t unit = 0;
      for (const auto& l : layer_specs(c))
        if (l.group == "block1") unit += l.params(false);
      lr_err = std::max(lr_err, std::abs(static_cast<double>(unit) / static_cast<double>(9 * n * n) -
                                         param_ratio_lr(c.rho[0], 3)));
    }
  out.push_back(below("accounting", "p_lr_matches_counting", lr_err, 1e-12));
  double ld_err = 0;
  for (std::size_t k : {1u, 3u})
    for (std::size_t n : {8u, 16u, 64u})
      for (std::size_t n2 = 1; n2 < n; ++n2)
        for (std::size_t L : {1u, 5u, 10u, 30u}) {
          const std::size_t n1 = n - n2;
          const double lcsc = static_cast<double>(L * n * (k * k * n2 + n1));
          double dense = 0;
          for (std::size_t p = 1; p <= L; ++p) dense += static_cast<double>(p * n2 * n1 + n1 * n2 * k * k);
          ld_err = std::max(ld_err, std::abs(lcsc / dense - param_ratio_ld(static_cast<double>(L),
                                                                           static_cast<double>(n2) / n, k)));
        }
  out.push_back(below("accounting", "p_ld_matches_counting", ld_err, 1e-12));

  const auto vdsr = cost_report(plain_conv_stack(20, 64, 1), 2, 720, 1280, true);
  const double g = static_cast<double>(vdsr.mult_adds) / 1e9;
  out.push_back({"accounting", "vdsr_mult_adds_612.6G", std::abs(g - 612.6) <= 612.6 * 0.005, g, 612.6 * 0.005,
                 std::to_string(vdsr.params) + " params at 1280x720"});
  return out;
}

// ---------------------------------------------------------------------------
// rho: degenerate splits

inline Dataset tiny_dataset(std::uint64_t seed, std::size_t images = 2, std::size_t size = 48) {
  Dataset ds;
  for (std::size_t i = 0; i < images; ++i)
    for (auto& p : extract_patches(synthetic_image(size, size, seed + i), 2, 12, 12)) ds.train.push_back(p);
  ds.train_images = images;
  return ds;
}

inline std::vector<CheckResult> rho_suite() {
  std::vector<CheckResult> out;
  {
    NetworkConfig cfg;
    cfg.blocks = 4;
    cfg.units_per_block = 3;
    cfg.width = 6;
    cfg.rho = {0, 0, 0, 0};
    cfg.enhanced = true;
    double worst = 0;
    Rng rng(12);
    for (int trial = 0; trial < 10; ++trial) {
      cfg.seed = static_cast<std::uint64_t>(trial + 1);
      auto p = NetworkParams<double>::init(cfg);
      p.for_each([](const std::string& name, Tensor<double>& t) {
        if (name.ends_with(".bias")) t.fill(0);
      });
      auto x = Tensor<double>::uniform(Shape{1, 1, 5, 5}, rng);
      auto y = Tensor<double>::uniform(Shape{1, 1, 5, 5}, rng);
      const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
      auto feat = [&](const Tensor<double>& in) { return network_forward(p, cfg, in).features.back(); };
      worst = std::max(worst, relative_error(feat(add(scale(x, a), scale(y, b))), add(scale(feat(x), a), scale(feat(y), b))));
    }
    out.push_back(below("rho", "rho0_superposition", worst, 1e-5, "4 blocks x 3 units, zero biases"));
  }
  {
    NetworkConfig cfg;
    cfg.blocks = 2;
    cfg.units_per_block = 2;
    cfg.width = 8;
    cfg.rho = {1.0, 1.0};
    cfg.fusion = true;
    TrainSchedule s;
    s.initial_lr = 1e-3;
    s.total_epochs = 4;
    s.batch_size = 4;
    const auto res = train(cfg, s, tiny_dataset(77));
    const double first = res.log.front().train_loss, last = res.log.back().train_loss;
    out.push_back({"rho", "rho1_trains", std::isfinite(last) && last < first, last / first, 1.0,
                   "final / first epoch loss, no linear branches"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// ordering: parameter totals of the comparison suite

inline std::vector<CheckResult> ordering_suite() {
  const auto suite = build_comparison_suite<float>(64, 30, 3, 1);
  std::vector<CheckResult> out;
  for (bool bias : {false, true}) {
    const auto c = suite_param_counts(suite, bias);
    const bool ok = c.lcsc < c.bc_dense && c.bc_dense < c.resnet && c.resnet < c.b_dense;
    out.push_back({"ordering", bias ? "lcsc<bc_dense<resnet<b_dense (bias)" : "lcsc<bc_dense<resnet<b_dense",
                   ok, static_cast<double>(c.lcsc), 0,
                   "lcsc " + std::to_string(c.lcsc) + ", bc_dense " + std::to_string(c.bc_dense) + ", resnet " +
                       std::to_string(c.resnet) + ", b_dense " + std::to_string(c.b_dense)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// determinism

inline std::vector<CheckResult> determinism_suite() {
  NetworkConfig cfg;
  cfg.blocks = 2;
  cfg.units_per_block = 2;
  cfg.width = 8;
  cfg.rho = {0.5, 0.5};
  cfg.fusion = true;
  cfg.seed = 5;
  TrainSchedule s;
  s.initial_lr = 1e-3;
  s.total_epochs = 2;
  s.batch_size = 4;
  const auto ds = tiny_dataset(31);
  const std::string a = serialize_checkpoint(train(cfg, s, ds).final);
  const std::string b = serialize_checkpoint(train(cfg, s, ds).final);
  std::size_t differing = a.size() == b.size() ? 0 : std::max(a.size(), b.size());
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) differing += a[i] != b[i];
  return {{"determinism", "identical_checkpoints", differing == 0, static_cast<double>(differing), 0,
           std::to_string(a.size()) + " bytes, sha256 " + sha256_hex(a).substr(0, 16)}};
}

// ---------------------------------------------------------------------------
// learning: desk-scale training against bicubic

struct LearningSetup {
  NetworkConfig network;
  TrainSchedule schedule;
  std::size_t train_images = 6;
  std::size_t val_images = 3;
  std::size_t image_size = 96;
  std::size_t patches = 200;
  std::uint64_t data_seed = 100;
};

inline LearningSetup desk_scale_setup() {
  LearningSetup s;
  s.network.blocks = 2;
  s.network.units_per_block = 3;
  s.network.width = 16;
  s.network.rho = {0.75, 0.5};
  s.network.fusion = true;
  s.network.scale = 2;
  s.schedule.initial_lr = 1e-3;
  s.schedule.decay_every = 20;
  s.schedule.total_epochs = 30;
  s.schedule.batch_size = 4;
  return s;
}

inline Dataset learning_dataset(const LearningSetup& s) {
  Dataset ds;
  const auto sc = s.network.scale;
  const std::size_t lr_size = default_patch_size(sc).lr_size;
  for (std::size_t i = 0; i < s.train_images; ++i)
    for (auto& p : extract_patches(synthetic_image(s.image_size, s.image_size, s.data_seed + i), sc, lr_size,
                                   lr_size / 3))
      ds.train.push_back(std::move(p));
  ds.train_images = s.train_images;
  Rng rng(s.data_seed);
  for (std::size_t i = ds.train.size() - 1; i > 0; --i) std::swap(ds.train[i], ds.train[rng.below(i + 1)]);
  if (ds.train.size() > s.patches) ds.train.resize(s.patches);
  for (std::size_t i = 0; i < s.val_images; ++i)
    ds.val.push_back({"heldout_" + std::to_string(i + 1),
                      synthetic_image(s.image_size, s.image_size, s.data_seed + 1000 + i)});
  return ds;
}

inline std::vector<CheckResult> learning_suite(const LearningSetup& setup = desk_scale_setup(),
                                               const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  const std::clock_t c0 = std::clock();
  const Dataset ds = learning_dataset(setup);
  TrainOptions opt;
  opt.on_epoch = on_epoch;
  const auto res = train(setup.network, setup.schedule, ds, opt);
  const double cpu = static_cast<double>(std::clock() - c0) / CLOCKS_PER_SEC;
  const auto& last = res.log.back();
  const double gain = *last.val_psnr - *last.val_bicubic_psnr;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu patches from %zu images, %zu epochs: %.3f dB vs bicubic %.3f dB",
                ds.train.size(), ds.train_images, res.log.size(), *last.val_psnr, *last.val_bicubic_psnr);
  return {{"learning", "heldout_gain_over_bicubic_db", gain >= 0.3, gain, 0.3, buf},
          below("learning", "cpu_seconds", cpu, 900.0)};
}

}  // namespace verify

inline const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"gradient", "fusion",   "fig4",        "lc",      "accounting",
                                              "rho",      "ordering", "determinism", "learning"};
  return names;
}

// Suites run when none are named; learning takes minutes and is requested by
// name or through "all".
inline const std::vector<std::string>& default_verify_suites() {
  static const std::vector<std::string> names{"gradient", "fusion",   "fig4",       "lc",
                                              "accounting", "rho", "ordering", "determinism"};
  return names;
}

inline std::vector<CheckResult> run_verify_suite(const std::string& name) {
  if (name == "gradient") return verify::gradient_suite();
  if (name == "fusion") return verify::fusion_suite();
  if (name == "fig4") return verify::fig4_suite();
  if (name == "lc") return verify::lc_suite();
  if (name == "accounting") return verify::accounting_suite();
  if (name == "rho") return verify::rho_suite();
  if (name == "ordering") return verify::ordering_suite();
  if (name == "determinism") return verify::determinism_suite();
  if (name == "learning") return verify::learning_suite();
  throw ConfigError("unknown verify suite '" + name + "'");
}

}  // namespace lcsc
