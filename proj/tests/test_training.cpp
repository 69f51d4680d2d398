#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "lcsc/gradcheck.hpp"
#include "lcsc/synthetic.hpp"
#include "lcsc/training.hpp"

using namespace lcsc;

namespace {

Tensor<double> rand_t(Shape s, Rng& rng) { return Tensor<double>::uniform(s, rng); }

NetworkConfig small_config(std::size_t width = 8) {
  NetworkConfig c;
  c.blocks = 2;
  c.units_per_block = 2;
  c.width = width;
  c.rho = {0.5, 0.5};
  c.fusion = true;
  return c;
}

Dataset patches(std::size_t images, std::uint64_t seed) {
  Dataset ds;
  for (std::size_t i = 0; i < images; ++i)
    for (auto& p : extract_patches(synthetic_image(48, 48, seed + i), 2, 12, 12)) ds.train.push_back(p);
  return ds;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("lcsc_training_" + name);
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST(L1Loss, TrivialValues) {
  Rng rng(1);
  auto a = rand_t(Shape{2, 1, 3, 3}, rng);
  EXPECT_EQ(l1_loss(a, a), 0.0);
  auto b = a;
  for (auto& v : b.data()) v += 1.0;
  EXPECT_NEAR(l1_loss(b, a), 1.0, 1e-12);
  EXPECT_THROW(l1_loss(a, Tensor<double>(Shape{1, 1, 3, 3})), ConfigError);
}

TEST(L1Loss, MatchesScalarOracle) {
  Rng rng(2);
  auto a = rand_t(Shape{1, 2, 2, 2}, rng), b = rand_t(Shape{1, 2, 2, 2}, rng);
  double acc = 0;
  for (std::size_t i = 0; i < 8; ++i) acc += std::abs(a[i] - b[i]);
  EXPECT_NEAR(l1_loss(a, b), acc / 8.0, 1e-15);
  Tape<double> t;
  EXPECT_NEAR(ag::l1_loss(t.constant(a), t.constant(b)).value()[0], acc / 8.0, 1e-15);
}

TEST(MultiSupervisedLoss, BetaZeroIsPlainLoss) {
  Rng rng(3);
  auto f = rand_t(Shape{1, 1, 4, 4}, rng), x = rand_t(Shape{1, 1, 4, 4}, rng);
  std::vector<Tensor<double>> ys{rand_t(Shape{1, 1, 4, 4}, rng), rand_t(Shape{1, 1, 4, 4}, rng)};
  EXPECT_EQ(multi_supervised_loss(f, ys, x, 0.0), l1_loss(f, x));
  EXPECT_EQ(multi_supervised_loss(x, {x, x}, x, 1.0), 0.0);
}

TEST(MultiSupervisedLoss, TwoOutputsHandComputed) {
  // Single-pixel tensors: |0.5-0| + |1-0| + |-2-0| with beta 1.
  const Shape s{1, 1, 1, 1};
  Tensor<double> f(s, 0.5), y1(s, 1.0), y2(s, -2.0), x(s, 0.0);
  EXPECT_DOUBLE_EQ(multi_supervised_loss(f, {y1, y2}, x, 1.0), 3.5);
  EXPECT_DOUBLE_EQ(multi_supervised_loss(f, {y1, y2}, x, 0.5), 2.0);
  Tape<double> t;
  EXPECT_DOUBLE_EQ(
      ag::multi_supervised_loss(t.constant(f), {t.constant(y1), t.constant(y2)}, t.constant(x), 1.0).value()[0], 3.5);
}

TEST(MultiSupervisedLoss, PermutationInvariant) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Shape s{1, 1, 3, 3};
    auto f = rand_t(s, rng), x = rand_t(s, rng);
    std::vector<Tensor<double>> ys;
    for (std::size_t i = 0, n = 2 + rng.below(4); i < n; ++i) ys.push_back(rand_t(s, rng));
    const double base = multi_supervised_loss(f, ys, x, 0.7);
    auto perm = ys;
    std::reverse(perm.begin(), perm.end());
    std::rotate(perm.begin(), perm.begin() + 1, perm.end());
    EXPECT_NEAR(multi_supervised_loss(f, perm, x, 0.7), base, 1e-12);
  }
}

TEST(MultiSupervisedLoss, TapeGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Shape s{1, 1, 3, 3};
    auto x = rand_t(s, rng);
    auto shifted = [&] {
      auto t = x;
      for (auto& v : t.data()) v += (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.05, 0.5);
      return t;
    };
    const auto r = gradcheck(
        [](Tape<double>&, const std::vector<Var<double>>& v) {
          return ag::multi_supervised_loss(v[0], {v[1], v[2]}, v[3], 0.8);
        },
        {shifted(), shifted(), shifted(), x});
    EXPECT_LT(r.rel_error, 1e-5);
  }
}

TEST(Adam, ZeroGradientLeavesParamsAndCountsStep) {
  Tensor<double> p(Shape{1, 1, 2, 2}, 0.3), g(Shape{1, 1, 2, 2});
  auto s = AdamState<double>::for_tensors({&p});
  adam_step<double>({&p}, {&g}, s, 1e-3);
  EXPECT_EQ(p, Tensor<double>(Shape{1, 1, 2, 2}, 0.3));
  EXPECT_EQ(s.step, 1u);
}

TEST(Adam, ConstantGradientClosedForm) {
  // With constant g the bias-corrected moments are exactly g and g^2, so each
  // step moves by lr * g / (|g| + eps).
  for (double g0 : {0.5, -2.0, 1e-3}) {
    Tensor<double> p(Shape{1, 1, 1, 1}, 1.0), g(Shape{1, 1, 1, 1}, g0);
    auto s = AdamState<double>::for_tensors({&p});
    const double lr = 0.01;
    for (int t = 1; t <= 50; ++t) {
      adam_step<double>({&p}, {&g}, s, lr);
      EXPECT_NEAR(p[0], 1.0 - t * lr * g0 / (std::abs(g0) + 1e-8), 1e-12) << "step " << t;
    }
  }
}

TEST(Adam, ScalarHandIteration) {
  // Varying gradients, iterated by hand from the update rule.
  Tensor<double> p(Shape{1, 1, 1, 1}, 0.0), g(Shape{1, 1, 1, 1});
  auto s = AdamState<double>::for_tensors({&p});
  const double gs[] = {1.0, -0.5, 0.25, 2.0};
  double m = 0, v = 0, x = 0;
  for (int t = 1; t <= 4; ++t) {
    g[0] = gs[t - 1];
    adam_step<double>({&p}, {&g}, s, 0.1);
    m = 0.9 * m + 0.1 * gs[t - 1];
    v = 0.999 * v + 0.001 * gs[t - 1] * gs[t - 1];
    x -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(p[0], x, 1e-12);
  }
}

TEST(Adam, FirstStepMagnitudeIsLearningRate) {
  Rng rng(4);
  auto p = rand_t(Shape{1, 2, 3, 3}, rng), g = rand_t(Shape{1, 2, 3, 3}, rng);
  const auto before = p;
  auto s = AdamState<double>::for_tensors({&p});
  adam_step<double>({&p}, {&g}, s, 1e-3);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(std::abs(p[i] - before[i]), 1e-3, 1e-8);
}

TEST(Adam, NonFiniteGradientAbortsWithoutChanges) {
  Tensor<double> p(Shape{1, 1, 1, 2}, 1.0), g(Shape{1, 1, 1, 2}, 0.5);
  auto s = AdamState<double>::for_tensors({&p});
  g[1] = std::nan("");
  EXPECT_THROW(adam_step<double>({&p}, {&g}, s, 0.1, {"w"}), NumericError);
  EXPECT_EQ(s.step, 0u);
  EXPECT_EQ(p, Tensor<double>(Shape{1, 1, 1, 2}, 1.0));
}

TEST(Schedule, StepDecay) {
  TrainSchedule s;
  EXPECT_DOUBLE_EQ(s.lr_at_epoch(1), 1e-4);
  EXPECT_DOUBLE_EQ(s.lr_at_epoch(15), 1e-4);
  EXPECT_NEAR(s.lr_at_epoch(16), 1e-5, 1e-20);
  EXPECT_NEAR(s.lr_at_epoch(31), 1e-6, 1e-20);
  EXPECT_THROW(s.lr_at_epoch(0), ConfigError);
}

TEST(Schedule, Validation) {
  TrainSchedule s;
  EXPECT_NO_THROW(s.validate());
  auto bad = s;
  bad.decay_factor = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = s;
  bad.initial_lr = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = s;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = s;
  bad.beta = -1;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Train, ZeroEpochsKeepsInitialization) {
  const auto cfg = small_config();
  TrainSchedule s;
  s.total_epochs = 0;
  const auto res = train(cfg, s, patches(1, 1));
  EXPECT_EQ(res.final.params, NetworkParams<float>::init(cfg));
  EXPECT_EQ(res.final.epoch, 0u);
  EXPECT_TRUE(res.log.empty());
}

TEST(Train, EmptyDatasetRejected) {
  EXPECT_THROW(train(small_config(), TrainSchedule{}, Dataset{}), DataError);
}

TEST(Train, MismatchedPairsRejected) {
  auto ds = patches(1, 1);
  auto cfg = small_config();
  cfg.scale = 3;
  EXPECT_THROW(train(cfg, TrainSchedule{}, ds), ConfigError);
}

TEST(Train, SingleSampleOverfit) {
  NetworkConfig cfg = small_config(16);
  cfg.fusion = false;
  cfg.seed = 3;
  Dataset ds;
  ds.train.push_back(extract_patches(synthetic_image(24, 24, 9), 2, 6, 6).front());
  TrainSchedule s;
  s.initial_lr = 1e-3;
  s.decay_every = 200;
  s.total_epochs = 500;
  s.batch_size = 1;
  s.beta = 0;
  std::vector<double> losses;
  TrainOptions opt;
  opt.on_step = [&](std::size_t, double l) { losses.push_back(l); };
  train(cfg, s, ds, opt);
  ASSERT_EQ(losses.size(), 500u);
  EXPECT_LT(*std::min_element(losses.begin(), losses.end()), 1e-2);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < 5; ++w) {
    const double mean = std::accumulate(losses.begin() + 100 * w, losses.begin() + 100 * (w + 1), 0.0) / 100.0;
    EXPECT_LE(mean, prev) << "window " << w;
    prev = mean;
  }
}

TEST(Train, ExtraSupervisionReachesEarlyBlocks) {
  // Block 2 has all-zero kernels, so F_2 and Y_2 ignore block 1. Block-1
  // parameters then receive gradient only through the Y_1 term.
  NetworkConfig cfg = small_config();
  cfg.fusion = false;
  auto p = NetworkParams<double>::init(cfg);
  for (auto& u : p.blocks[1].units) {
    if (u.k_l) *u.k_l = ConvKernel<double>::zeros(u.k_l->out_channels(), u.k_l->in_channels(), 1);
    if (u.k_nl) *u.k_nl = ConvKernel<double>::zeros(u.k_nl->out_channels(), u.k_nl->in_channels(), 3);
  }
  Rng rng(5);
  auto x = rand_t(Shape{1, 1, 4, 4}, rng);
  auto target = rand_t(Shape{1, 1, 8, 8}, rng);
  auto block1_grad = [&](double beta) {
    auto g = NetworkParams<double>::zeros_like(p);
    Tape<double> t;
    auto out = network_forward(t, p, cfg, t.constant(x), &g, true);
    t.backward(ag::multi_supervised_loss(out.final, out.intermediates, t.constant(target), beta));
    double norm = 0;
    for (const auto& u : g.blocks[0].units) {
      if (u.k_l) norm += max_abs(u.k_l->weight);
      if (u.k_nl) norm += max_abs(u.k_nl->weight);
    }
    return norm;
  };
  EXPECT_EQ(block1_grad(0.0), 0.0);
  EXPECT_GT(block1_grad(1.0), 0.0);
}

TEST(Train, SameSeedSameBytes) {
  const auto cfg = small_config();
  TrainSchedule s;
  s.initial_lr = 1e-3;
  s.total_epochs = 2;
  s.batch_size = 4;
  const auto ds = patches(2, 11);
  const auto a = serialize_checkpoint(train(cfg, s, ds).final);
  const auto b = serialize_checkpoint(train(cfg, s, ds).final);
  EXPECT_EQ(a, b);
  auto other = cfg;
  other.seed = 2;
  EXPECT_NE(serialize_checkpoint(train(other, s, ds).final), a);
}

TEST(Train, WritesCheckpointsAndLog) {
  const auto dir = temp_dir("files");
  auto cfg = small_config();
  TrainSchedule s;
  s.initial_lr = 1e-3;
  s.total_epochs = 2;
  s.batch_size = 8;
  auto ds = patches(2, 21);
  ds.val.push_back({"v", synthetic_image(24, 24, 5)});
  TrainOptions opt;
  opt.out_dir = dir;
  const auto res = train(cfg, s, ds, opt);
  ASSERT_TRUE(std::filesystem::exists(dir / kCheckpointFile));
  ASSERT_TRUE(std::filesystem::exists(dir / kBestCheckpointFile));
  std::ifstream log(dir / kMetricsLogFile);
  std::string line;
  std::size_t records = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["epoch"].get<std::size_t>(), ++records);
    EXPECT_TRUE(j["val_psnr"].is_number());
  }
  EXPECT_EQ(records, 2u);
  EXPECT_EQ(load_checkpoint(dir / kCheckpointFile), res.final);
  EXPECT_EQ(load_checkpoint(dir / kBestCheckpointFile), *res.best);
  std::filesystem::remove_all(dir);
}

TEST(Train, MaxStepsStopsEarly) {
  TrainSchedule s;
  s.total_epochs = 10;
  s.batch_size = 2;
  TrainOptions opt;
  opt.max_steps = 3;
  const auto res = train(small_config(), s, patches(1, 3), opt);
  // Four patches at batch 2: the third step is the first of epoch 2.
  EXPECT_EQ(res.steps, 3u);
  ASSERT_EQ(res.log.size(), 2u);
  EXPECT_EQ(res.log[1].steps, 1u);
}

TEST(Train, DivergenceAbortsKeepingLastCheckpoint) {
  const auto dir = temp_dir("diverge");
  TrainSchedule s;
  s.initial_lr = 1e30;
  s.total_epochs = 50;
  s.batch_size = 4;
  TrainOptions opt;
  opt.out_dir = dir;
  EXPECT_THROW(train(small_config(), s, patches(1, 4), opt), NumericError);
  const auto ck = load_checkpoint(dir / kCheckpointFile);
  bool finite = true;
  ck.params.for_each([&](const std::string&, const Tensor<float>& t) { finite = finite && t.all_finite(); });
  EXPECT_TRUE(finite);
  std::filesystem::remove_all(dir);
}

TEST(Evaluate, ZeroNetworkReproducesBicubic) {
  auto cfg = small_config();
  auto p = NetworkParams<float>::init(cfg);
  p.for_each([](const std::string&, Tensor<float>& t) { t.fill(0.0f); });
  const auto hr = synthetic_image(32, 32, 8);
  const auto lr = downscale_lr(hr, 2);
  const auto sr = super_resolve(p, cfg, lr);
  EXPECT_LT(max_abs_diff(Tensor<double>(Shape{1, 1, 32, 32}, sr.data),
                         Tensor<double>(Shape{1, 1, 32, 32}, bicubic_baseline(hr, 2).data)),
            1e-12);
}
