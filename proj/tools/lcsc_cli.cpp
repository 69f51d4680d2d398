#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "lcsc/accounting.hpp"
#include "lcsc/checkpoint.hpp"
#include "lcsc/config.hpp"
#include "lcsc/dataset.hpp"
#include "lcsc/evaluate.hpp"
#include "lcsc/fusion_export.hpp"
#include "lcsc/synthetic.hpp"
#include "lcsc/training.hpp"
#include "lcsc/verify.hpp"

using namespace lcsc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitVerify = 4;

std::string fmt(double v, int precision = 4) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

// JSON has no infinities; non-finite metrics travel as strings.
nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return fmt(v);
}

void require_exists(const std::string& path, const std::string& key) {
  if (!path.empty() && !fs::exists(path)) throw ConfigError(key + ": path does not exist: " + path);
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t max_steps = 0;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  RunConfig rc = load_run_config(a.config, a.overrides);
  if (a.seed) rc.network.seed = *a.seed;
  if (!a.out.empty()) rc.out_dir = a.out;
  if (rc.data.root.empty() && rc.data.manifest.empty())
    if (const char* env = std::getenv("LCSC_DATA_ROOT")) rc.data.root = env;
  rc.validate();
  require_exists(rc.data.root, "data.root");
  require_exists(rc.data.manifest, "data.manifest");
  require_exists(rc.data.val_dir, "data.val_dir");

  fs::create_directories(rc.out_dir);
  {
    std::ofstream cfg_out(fs::path(rc.out_dir) / "config.ini");
    cfg_out << write_ini(rc);
  }
  const Dataset ds = load_dataset(rc.data, rc.network.scale, rc.network.residual_target, rc.network.seed);
  if (!a.quiet)
    std::cout << "training on " << ds.train.size() << " patches from " << ds.train_images << " images, "
              << ds.val.size() << " validation images\n";

  TrainOptions opt;
  opt.out_dir = rc.out_dir;
  opt.max_steps = a.max_steps;
  if (!a.quiet)
    opt.on_epoch = [](const EpochRecord& r) {
      std::cout << "epoch " << r.epoch << "  lr " << r.lr << "  loss " << fmt(r.train_loss, 5);
      if (r.val_psnr) std::cout << "  val " << fmt(*r.val_psnr) << " dB (bicubic " << fmt(*r.val_bicubic_psnr) << ")";
      std::cout << std::endl;
    };
  const TrainResult res = train(rc.network, rc.schedule, ds, opt);
  if (!a.quiet) std::cout << "done: " << res.steps << " steps, checkpoints in " << rc.out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string model = "checkpoint";
  std::string data;
  std::string reference = "hr";
  std::size_t scale = 2;
  bool json = false;
};

int cmd_eval(EvalArgs a) {
  std::optional<Checkpoint> ck;
  if (a.model == "checkpoint") {
    if (a.checkpoint.empty()) throw ConfigError("eval: --checkpoint is required unless --model bicubic");
    ck = load_checkpoint(a.checkpoint);
    a.scale = ck->network.scale;
  }
  if (a.scale < 2 || a.scale > 4) throw ConfigError("unsupported scale " + std::to_string(a.scale));
  if (a.data.empty())
    if (const char* env = std::getenv("LCSC_DATA_ROOT")) a.data = env;
  if (a.data.empty()) throw ConfigError("eval: no dataset directory (--data or LCSC_DATA_ROOT)");
  if (!fs::is_directory(a.data)) throw ConfigError("eval: not a directory: " + a.data);
  const auto paths = scan_images(a.data);
  if (paths.empty()) throw DataError("eval: no images in " + a.data);

  EvalSummary s;
  for (const auto& p : paths) {
    ImagePlane hr;
    try {
      hr = crop_to_scale(read_luminance(p), a.scale);
    } catch (const DataError& e) {
      std::cerr << "warning: skipping " << p.string() << ": " << e.what() << "\n";
      s.skipped.push_back(p.string());
      continue;
    }
    const ImagePlane bic = bicubic_baseline(hr, a.scale);
    const ImagePlane sr = ck ? super_resolve(ck->params, ck->network, downscale_lr(hr, a.scale)) : bic;
    const ImagePlane& ref = a.reference == "bicubic" ? bic : hr;
    s.rows.push_back({p.filename().string(), psnr(sr, ref, a.scale), ssim_or_nan(sr, ref, a.scale),
                      psnr(bic, ref, a.scale), ssim_or_nan(bic, ref, a.scale)});
  }
  if (s.rows.empty()) throw DataError("eval: no readable images in " + a.data);
  finish_summary(s);

  if (a.json) {
    auto row = [](const EvalRow& r) {
      return nlohmann::json{{"name", r.name},          {"psnr", num(r.psnr)},
                            {"ssim", num(r.ssim)},     {"bicubic_psnr", num(r.bicubic_psnr)},
                            {"bicubic_ssim", num(r.bicubic_ssim)}};
    };
    for (const auto& r : s.rows) std::cout << row(r).dump() << "\n";
    auto m = row(s.mean);
    m["shave"] = a.scale;
    m["skipped"] = s.skipped.size();
    std::cout << m.dump() << "\n";
    return kExitOk;
  }
  std::size_t w = 4;
  for (const auto& r : s.rows) w = std::max(w, r.name.size());
  auto line = [&](const std::string& name, const std::string& c1, const std::string& c2, const std::string& c3,
                  const std::string& c4) {
    std::cout << std::left << std::setw(static_cast<int>(w)) << name << std::right << std::setw(10) << c1
              << std::setw(9) << c2 << std::setw(14) << c3 << std::setw(13) << c4 << "\n";
  };
  line("image", "psnr", "ssim", "bicubic_psnr", "bicubic_ssim");
  for (const auto& r : s.rows)
    line(r.name, fmt(r.psnr), fmt(r.ssim), fmt(r.bicubic_psnr), fmt(r.bicubic_ssim));
  line("mean", fmt(s.mean.psnr), fmt(s.mean.ssim), fmt(s.mean.bicubic_psnr), fmt(s.mean.bicubic_ssim));
  std::cout << "scale x" << a.scale << ", shave " << a.scale << " px, reference " << a.reference << ", "
            << s.rows.size() << " images, " << s.skipped.size() << " skipped\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SrArgs {
  std::string checkpoint;
  std::string input;
  std::string output;
  std::size_t scale = 0;
  std::string fusion_maps;
};

int cmd_sr(const SrArgs& a) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  if (a.scale && a.scale != ck.network.scale)
    throw ConfigError("scale mismatch: checkpoint is x" + std::to_string(ck.network.scale) + ", requested x" +
                      std::to_string(a.scale));
  const ImagePlane lr = read_image(a.input);
  write_image(super_resolve_color(ck.params, ck.network, lr), a.output);
  if (!a.fusion_maps.empty()) {
    if (!ck.network.fusion || ck.network.blocks < 2) throw ConfigError("sr: model has no fusion weights");
    const ImagePlane y = lr.channels == 3 ? rgb_to_ycbcr(lr).channel(0) : lr;
    const auto fwd = network_forward(ck.params, ck.network, network_input<float>(y));
    const auto [fused, trace] = fuse(fwd.intermediates, ck.params.fusion);
    for (const auto& p : export_weight_maps(trace, a.fusion_maps)) std::cout << p.string() << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CountArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string checkpoint;
  std::string hr = "1280x720";
  std::size_t plain_layers = 0;
  std::size_t plain_width = 64;
  bool no_bias = false;
  bool json = false;
};

int cmd_count(const CountArgs& a) {
  std::size_t w = 0, h = 0;
  const auto x = a.hr.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument("no x");
    w = std::stoul(a.hr.substr(0, x));
    h = std::stoul(a.hr.substr(x + 1));
  } catch (const std::exception&) {
    throw ConfigError("--hr expects WIDTHxHEIGHT, got " + a.hr);
  }
  if (w == 0 || h == 0) throw ConfigError("--hr must be positive");

  CostReport r;
  if (a.plain_layers) {
    r = cost_report(plain_conv_stack(a.plain_layers, a.plain_width), 1, h, w, !a.no_bias);
  } else {
    const NetworkConfig cfg =
        a.checkpoint.empty() ? load_run_config(a.config, a.overrides).network : load_checkpoint(a.checkpoint).network;
    r = cost_report(cfg, h, w, !a.no_bias);
  }
  if (a.json)
    std::cout << to_json(r).dump(2) << "\n";
  else
    std::cout << render_table(r);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::vector<std::string> suites;
  bool json = false;
};

int cmd_verify(const VerifyArgs& a) {
  std::vector<std::string> suites = a.suites;
  if (suites.empty()) suites = default_verify_suites();
  if (suites.size() == 1 && suites[0] == "all") suites = verify_suite_names();
  std::size_t failed = 0, total = 0;
  for (const auto& name : suites) {
    for (const auto& r : run_verify_suite(name)) {
      ++total;
      if (!r.passed) ++failed;
      if (a.json) {
        std::cout << to_json(r).dump() << std::endl;
      } else {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.suite << "/" << r.name << "  measured " << r.measured
                  << "  tolerance " << r.tolerance;
        if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
        std::cout << std::endl;
      }
    }
  }
  if (!a.json) std::cout << (total - failed) << "/" << total << " checks passed\n";
  return failed ? kExitVerify : kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::size_t count = 8;
  std::size_t val = 2;
  std::size_t size = 96;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a) {
  if (a.size < 8) throw ConfigError("synth: --size must be at least 8");
  std::cout << write_synthetic_dataset(a.out, a.count, a.val, a.size, a.seed).string() << "\n";
  return kExitOk;
}

template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LCSCNet super-resolution toolkit"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a network from a config file");
  train_cmd->add_option("-c,--config", train_args.config, "INI config file")->check(CLI::ExistingFile);
  train_cmd->add_option("-o,--override", train_args.overrides, "section.key=value, repeatable");
  train_cmd->add_option("--seed", train_args.seed, "Overrides network.seed");
  train_cmd->add_option("--out", train_args.out, "Overrides output.dir");
  train_cmd->add_option("--max-steps", train_args.max_steps, "Stop after this many optimizer steps");
  train_cmd->add_flag("-q,--quiet", train_args.quiet);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM of a model over an image directory");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Model checkpoint");
  eval_cmd->add_option("--model", eval_args.model, "checkpoint or bicubic")
      ->check(CLI::IsMember({"checkpoint", "bicubic"}));
  eval_cmd->add_option("-d,--data", eval_args.data, "HR image directory (default $LCSC_DATA_ROOT)");
  eval_cmd->add_option("--reference", eval_args.reference, "Score against hr or bicubic")
      ->check(CLI::IsMember({"hr", "bicubic"}));
  eval_cmd->add_option("--scale", eval_args.scale, "Scale for --model bicubic");
  eval_cmd->add_flag("--json", eval_args.json, "JSON lines output");

  SrArgs sr_args;
  auto* sr_cmd = app.add_subcommand("sr", "Super-resolve one image");
  sr_cmd->add_option("--checkpoint", sr_args.checkpoint)->required();
  sr_cmd->add_option("-i,--input", sr_args.input)->required()->check(CLI::ExistingFile);
  sr_cmd->add_option("--output", sr_args.output)->required();
  sr_cmd->add_option("--scale", sr_args.scale, "Must match the checkpoint");
  sr_cmd->add_option("--fusion-maps", sr_args.fusion_maps, "Directory for fusion weight maps");

  CountArgs count_args;
  auto* count_cmd = app.add_subcommand("count", "Parameter and Mult&Adds report");
  count_cmd->add_option("-c,--config", count_args.config)->check(CLI::ExistingFile);
  count_cmd->add_option("-o,--override", count_args.overrides);
  count_cmd->add_option("--checkpoint", count_args.checkpoint);
  count_cmd->add_option("--hr", count_args.hr, "Output resolution WIDTHxHEIGHT");
  count_cmd->add_option("--plain-stack", count_args.plain_layers, "Plain 3x3 conv stack of this depth instead");
  count_cmd->add_option("--width", count_args.plain_width, "Width of the plain stack");
  count_cmd->add_flag("--no-bias", count_args.no_bias);
  count_cmd->add_flag("--json", count_args.json);

  VerifyArgs verify_args;
  auto* verify_cmd = app.add_subcommand("verify", "Run verification suites");
  std::vector<std::string> suite_choices = verify_suite_names();
  suite_choices.push_back("all");
  verify_cmd->add_option("suites", verify_args.suites, "Suites to run (default: all but learning)")
      ->check(CLI::IsMember(suite_choices));
  verify_cmd->add_flag("--json", verify_args.json, "JSON lines output");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic image set with a manifest");
  synth_cmd->add_option("--out", synth_args.out)->required();
  synth_cmd->add_option("--count", synth_args.count);
  synth_cmd->add_option("--val", synth_args.val);
  synth_cmd->add_option("--size", synth_args.size);
  synth_cmd->add_option("--seed", synth_args.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (*train_cmd) return guarded([&] { return cmd_train(train_args); });
  if (*eval_cmd) return guarded([&] { return cmd_eval(eval_args); });
  if (*sr_cmd) return guarded([&] { return cmd_sr(sr_args); });
  if (*count_cmd) return guarded([&] { return cmd_count(count_args); });
  if (*verify_cmd) return guarded([&] { return cmd_verify(verify_args); });
  if (*synth_cmd) return guarded([&] { return cmd_synth(synth_args); });
  return kExitConfig;
}
