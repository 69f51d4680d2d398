#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>

#include "lcsc/checkpoint.hpp"
#include "lcsc/config.hpp"
#include "lcsc/evaluate.hpp"
#include "lcsc/synthetic.hpp"

using namespace lcsc;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run lcsc_cli(const std::string& args, const std::string& env = "env -u LCSC_DATA_ROOT") {
  const std::string cmd = env + " " + std::string(LCSC_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lcsc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path toy_config(const fs::path& manifest, std::size_t epochs = 2) {
    return write("toy.ini", "[network]\nblocks = 2\nunits_per_block = 2\nwidth = 8\nrho = 0.5\nfusion = true\n"
                            "[train]\nepochs = " + std::to_string(epochs) + "\nbatch_size = 4\n"
                            "[data]\nmanifest = " + manifest.string() + "\npatch_size = 12\n");
  }

  fs::path dir_;
};

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string l; std::getline(in, l);) n += !l.empty();
  return n;
}

}  // namespace

TEST_F(Cli, HelpAndMissingSubcommand) {
  EXPECT_EQ(lcsc_cli("--help").code, 0);
  EXPECT_EQ(lcsc_cli("").code, 2);
  EXPECT_EQ(lcsc_cli("frobnicate").code, 2);
}

TEST_F(Cli, TrainToyConfigTwoEpochs) {
  const auto manifest = write_synthetic_dataset(dir_ / "data", 6, 2, 48, 3);
  const auto out = dir_ / "run";
  const auto r = lcsc_cli("train -c " + q(toy_config(manifest)) + " --out " + q(out));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(count_lines(out / "metrics.jsonl"), 2u);
  const auto ck = load_checkpoint(out / "checkpoint.ckpt");
  EXPECT_EQ(ck.epoch, 2u);
  EXPECT_TRUE(fs::exists(out / "best.ckpt"));

  // The effective config written next to the run reproduces it.
  const RunConfig eff = load_run_config(out / "config.ini");
  EXPECT_EQ(eff.network, ck.network);
  EXPECT_EQ(eff.out_dir, out.string());
}

TEST_F(Cli, SeedFlagOverridesConfig) {
  const auto manifest = write_synthetic_dataset(dir_ / "data", 4, 1, 48, 3);
  const auto cfg = toy_config(manifest, 1);
  ASSERT_EQ(lcsc_cli("train -q -c " + q(cfg) + " --seed 77 --out " + q(dir_ / "a")).code, 0);
  EXPECT_EQ(load_checkpoint(dir_ / "a" / "checkpoint.ckpt").network.seed, 77u);
}

TEST_F(Cli, DataRootFromEnvironment) {
  write_synthetic_dataset(dir_ / "data", 3, 1, 48, 5);
  const auto cfg = write("env.ini", "[network]\nblocks = 1\nunits_per_block = 1\nwidth = 4\n[train]\nepochs = 1\n"
                                    "[data]\npatch_size = 12\n");
  const auto r = lcsc_cli("train -c " + q(cfg) + " --out " + q(dir_ / "run"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("set either manifest or root"), std::string::npos) << r.out;
  const auto e = lcsc_cli("train -q -c " + q(cfg) + " --out " + q(dir_ / "run"), "LCSC_DATA_ROOT=" + q(dir_ / "data"));
  EXPECT_EQ(e.code, 0) << e.out;
  EXPECT_TRUE(fs::exists(dir_ / "run" / "checkpoint.ckpt"));
}

TEST_F(Cli, BadRhoIsConfigError) {
  const auto manifest = write_synthetic_dataset(dir_ / "data", 3, 1, 48, 3);
  const auto r = lcsc_cli("train -c " + q(toy_config(manifest)) + " -o network.rho=0.3 --out " + q(dir_ / "run"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("rho not integral"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(dir_ / "run" / "checkpoint.ckpt"));
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(lcsc_cli("train -c " + q(write("a.ini", "[network]\nwidht = 8\n"))).code, 2);
  EXPECT_EQ(lcsc_cli("train -c " + q(write("b.ini", "[data]\nroot = /no/such/dir\n"))).code, 2);
  EXPECT_EQ(lcsc_cli("train -c " + q(dir_ / "missing.ini")).code, 2);
}

TEST_F(Cli, OverfitConfigReachesLowLoss) {
  fs::create_directories(dir_ / "one");
  write_image(synthetic_image(24, 24, 4), dir_ / "one" / "img.png");
  write("one/manifest.txt", "train img.png\n");
  const auto cfg = write("overfit.ini",
                         "[network]\nblocks = 2\nunits_per_block = 2\nwidth = 16\nrho = 0.5\nfusion = false\n"
                         "[train]\ninitial_lr = 1e-3\ndecay_every = 1000\nepochs = 400\nbatch_size = 1\nbeta = 0\n"
                         "[data]\nmanifest = " + (dir_ / "one" / "manifest.txt").string() + "\npatch_size = 12\n");
  ASSERT_EQ(lcsc_cli("train -q -c " + q(cfg) + " --out " + q(dir_ / "run")).code, 0);
  std::ifstream log(dir_ / "run" / "metrics.jsonl");
  double last = 1e9;
  for (std::string l; std::getline(log, l);) last = nlohmann::json::parse(l)["train_loss"].get<double>();
  EXPECT_LT(last, 2e-2);
}

TEST_F(Cli, VerifyUnknownSuiteIsUsageError) {
  const auto r = lcsc_cli("verify nonsense");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("nonsense"), std::string::npos);
}

TEST_F(Cli, VerifyFig4SuiteIsMachineReadableAndFast) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = lcsc_cli("verify fig4 --json");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_EQ(r.code, 0) << r.out;
  const auto ls = lines(r.out);
  ASSERT_FALSE(ls.empty());
  for (const auto& l : ls) {
    const auto j = nlohmann::json::parse(l);
    EXPECT_EQ(j["suite"], "fig4");
    EXPECT_TRUE(j["passed"].get<bool>()) << l;
    EXPECT_TRUE(j.contains("measured"));
  }
  EXPECT_LT(secs, 10.0);
}

TEST_F(Cli, CountReports) {
  const auto r = lcsc_cli("count --plain-stack 20 --width 64 --json");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(nlohmann::json::parse(r.out)["params"].get<std::size_t>(), 665921u);
  const auto cfg = write("c.ini", "[network]\nblocks = 3\nwidth = 16\nfusion = true\n");
  const auto t = lcsc_cli("count -c " + q(cfg));
  ASSERT_EQ(t.code, 0) << t.out;
  for (const char* label : {"pfe", "block1", "block3", "head", "head reuse", "fusion gates", "total"})
    EXPECT_NE(t.out.find(label), std::string::npos) << label;
  EXPECT_EQ(lcsc_cli("count --hr 12by7").code, 2);
}

TEST_F(Cli, SuperResolveDimsScaleAndZeroNet) {
  Checkpoint ck;
  ck.network.blocks = 2;
  ck.network.units_per_block = 1;
  ck.network.width = 4;
  ck.network.rho = {0.5, 0.5};
  ck.network.fusion = true;
  ck.network.scale = 3;
  ck.params = NetworkParams<float>::init(ck.network);
  ck.params.for_each([](const std::string&, Tensor<float>& t) { t.fill(0); });
  save_checkpoint(ck, dir_ / "zero.ckpt");

  const ImagePlane lr = synthetic_image(10, 14, 2);
  write_image(lr, dir_ / "in.png");
  auto r = lcsc_cli("sr --checkpoint " + q(dir_ / "zero.ckpt") + " -i " + q(dir_ / "in.png") + " --output " +
                    q(dir_ / "out.png") + " --fusion-maps " + q(dir_ / "maps"));
  ASSERT_EQ(r.code, 0) << r.out;
  const ImagePlane up = read_image(dir_ / "out.png");
  EXPECT_EQ(up.height, 30u);
  EXPECT_EQ(up.width, 42u);
  EXPECT_TRUE(fs::exists(dir_ / "maps" / "weight_1.png"));
  EXPECT_TRUE(fs::exists(dir_ / "maps" / "weight_2.png"));
  // Zero weights in residual mode leave the bicubic upscale (up to 8-bit rounding).
  const ImagePlane bic = clamp_unit(bicubic_resize(read_image(dir_ / "in.png"), 3.0));
  for (std::size_t i = 0; i < up.data.size(); ++i) ASSERT_NEAR(up.data[i], bic.data[i], 0.5 / 255 + 1e-9) << i;

  // Constant gray stays finite and near-constant.
  write_image(ImagePlane(8, 8, 1, ColorSpace::LuminanceY, 0.5), dir_ / "gray.png");
  r = lcsc_cli("sr --checkpoint " + q(dir_ / "zero.ckpt") + " -i " + q(dir_ / "gray.png") + " --output " +
               q(dir_ / "gray_up.png"));
  ASSERT_EQ(r.code, 0) << r.out;
  for (double v : read_image(dir_ / "gray_up.png").data) EXPECT_NEAR(v, 0.5, 1.0 / 255);

  r = lcsc_cli("sr --checkpoint " + q(dir_ / "zero.ckpt") + " -i " + q(dir_ / "in.png") + " --output " +
               q(dir_ / "x.png") + " --scale 2");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("scale mismatch"), std::string::npos) << r.out;
}

TEST_F(Cli, EvalBicubicAgainstItselfIsInfinite) {
  write_synthetic_dataset(dir_ / "set", 3, 1, 48, 8);
  const auto r = lcsc_cli("eval --model bicubic --reference bicubic -d " + q(dir_ / "set") + " --json");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 4u);
  for (const auto& l : ls) EXPECT_EQ(nlohmann::json::parse(l)["psnr"], "inf") << l;
}

TEST_F(Cli, EvalSkipsUnreadableAndCountsThem) {
  write_synthetic_dataset(dir_ / "set", 2, 1, 48, 8);
  write("set/broken.png", "not a png");
  const auto r = lcsc_cli("eval --model bicubic -d " + q(dir_ / "set") + " --json");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("warning: skipping"), std::string::npos);
  const auto ls = lines(r.out);
  const auto summary = nlohmann::json::parse(ls.back());
  EXPECT_EQ(summary["skipped"], 1);
  EXPECT_EQ(summary["name"], "mean");
  // Bicubic against HR: both columns agree.
  EXPECT_DOUBLE_EQ(summary["psnr"].get<double>(), summary["bicubic_psnr"].get<double>());
}

TEST_F(Cli, EvalEmptyDirectoryFails) {
  fs::create_directories(dir_ / "empty");
  EXPECT_EQ(lcsc_cli("eval --model bicubic -d " + q(dir_ / "empty")).code, 3);
  EXPECT_EQ(lcsc_cli("eval -d " + q(dir_ / "empty")).code, 2);
}
