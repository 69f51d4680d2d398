#pragma once

// Losses and the training loop.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcsc/checkpoint.hpp"
#include "lcsc/dataset.hpp"
#include "lcsc/evaluate.hpp"

namespace lcsc {

// Mean absolute deviation over every element.
template <typename T>
double l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  detail::require_same(pred.shape(), target.shape(), "l1_loss");
  if (pred.size() == 0) throw ConfigError("l1_loss: empty tensors");
  double acc = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    acc += std::abs(static_cast<double>(pred[i]) - static_cast<double>(target[i]));
  return acc / static_cast<double>(pred.size());
}

// l1(final, target) + beta * sum_d l1(Y_d, target)
template <typename T>
double multi_supervised_loss(const Tensor<T>& final, const std::vector<Tensor<T>>& intermediates,
                             const Tensor<T>& target, double beta) {
  double loss = l1_loss(final, target);
  double extra = 0;
  for (const auto& y : intermediates) extra += l1_loss(y, target);
  return loss + beta * extra;
}

namespace ag {
template <typename T>
Var<T> multi_supervised_loss(Var<T> final, const std::vector<Var<T>>& intermediates, Var<T> target, T beta) {
  Var<T> loss = l1_loss(final, target);
  if (beta == T(0)) return loss;
  for (const auto& y : intermediates) loss = add(loss, scale(l1_loss(y, target), beta));
  return loss;
}
}  // namespace ag

// Concatenates single-sample tensors along the batch axis.
template <typename T>
Tensor<T> stack_batch(const std::vector<const Tensor<T>*>& items) {
  if (items.empty()) throw ConfigError("stack_batch: no items");
  Shape s = items.front()->shape();
  const std::size_t per = s.size();
  Tensor<T> out(Shape{items.size() * s.n, s.c, s.h, s.w});
  auto d = out.data();
  for (std::size_t i = 0; i < items.size(); ++i) {
    detail::require_same(items[i]->shape(), s, "stack_batch");
    const auto src = items[i]->data();
    std::copy(src.begin(), src.end(), d.begin() + static_cast<long>(i * per));
  }
  return out;
}

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0;
  double train_loss = 0;
  std::size_t steps = 0;
  std::optional<double> val_psnr;
  std::optional<double> val_bicubic_psnr;
};

inline nlohmann::json to_json(const EpochRecord& r) {
  nlohmann::json j{{"epoch", r.epoch}, {"lr", r.lr}, {"train_loss", r.train_loss}, {"steps", r.steps}};
  j["val_psnr"] = r.val_psnr ? nlohmann::json(*r.val_psnr) : nlohmann::json(nullptr);
  j["val_bicubic_psnr"] = r.val_bicubic_psnr ? nlohmann::json(*r.val_bicubic_psnr) : nlohmann::json(nullptr);
  return j;
}

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: keep everything in memory
  std::size_t max_steps = 0;      // 0: no limit
  std::function<void(std::size_t step, double loss)> on_step;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  Checkpoint final;
  std::optional<Checkpoint> best;
  std::vector<EpochRecord> log;
  std::size_t steps = 0;
};

// Mean validation PSNR of the network and of bicubic upscaling.
inline std::pair<double, double> validation_psnr(const NetworkParams<float>& p, const NetworkConfig& cfg,
                                                 const std::vector<NamedImage>& val) {
  std::vector<std::pair<std::string, ImagePlane>> images;
  for (const auto& v : val) images.emplace_back(v.name, v.image);
  const auto s = evaluate(p, cfg, images);
  return {s.mean.psnr, s.mean.bicubic_psnr};
}

inline constexpr const char* kCheckpointFile = "checkpoint.ckpt";
inline constexpr const char* kBestCheckpointFile = "best.ckpt";
inline constexpr const char* kMetricsLogFile = "metrics.jsonl";

// Epoch loop over seeded shuffles of the training patches. After every epoch
// the latest state is written to checkpoint.ckpt and one record is appended
// to metrics.jsonl; best.ckpt tracks the highest validation PSNR (lowest
// training loss when there is no validation set). A non-finite loss or
// gradient stops training with NumericError; checkpoint.ckpt then holds the
// last completed epoch.
inline TrainResult train(const NetworkConfig& cfg, const TrainSchedule& sched, const Dataset& data,
                         const TrainOptions& opt = {}) {
  cfg.validate();
  sched.validate();
  if (data.train.empty()) throw DataError("empty training set");
  for (const auto& pair : data.train)
    if (pair.scale != cfg.scale || pair.residual != cfg.residual_target)
      throw ConfigError("training pairs were built for a different scale or target mode");

  std::vector<Tensor<float>> inputs, targets;
  for (const auto& pair : data.train) {
    inputs.push_back(network_input<float>(pair.lr));
    targets.push_back(network_target<float>(pair));
  }

  TrainResult res;
  res.final.network = cfg;
  res.final.schedule = sched;
  res.final.params = NetworkParams<float>::init(cfg);
  res.final.optimizer = adam_init(res.final.params);
  NetworkParams<float>& params = res.final.params;
  AdamState<float>& state = *res.final.optimizer;
  const auto param_refs = tensor_refs(params);
  const auto names = tensor_names(params);
  NetworkParams<float> grads = NetworkParams<float>::zeros_like(params);
  const auto grad_refs = tensor_refs(std::as_const(grads));

  const bool write = !opt.out_dir.empty();
  std::ofstream log;
  if (write) {
    std::filesystem::create_directories(opt.out_dir);
    log.open(opt.out_dir / kMetricsLogFile, std::ios::trunc);
    if (!log) throw DataError("cannot write " + (opt.out_dir / kMetricsLogFile).string());
    save_checkpoint(res.final, opt.out_dir / kCheckpointFile);
  }

  Rng shuffle_rng(cfg.seed * 0x9e3779b97f4a7c15ull + 1);
  std::vector<std::size_t> order(inputs.size());
  double best_metric = -std::numeric_limits<double>::infinity();
  const auto batch_sz = sched.batch_size;
  bool stop = false;

  for (std::size_t epoch = 1; epoch <= sched.total_epochs && !stop; ++epoch) {
    const double lr = sched.lr_at_epoch(epoch);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.below(i + 1)]);

    double loss_sum = 0;
    std::size_t seen = 0, epoch_steps = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_sz) {
      const std::size_t end = std::min(order.size(), start + batch_sz);
      std::vector<const Tensor<float>*> xb, yb;
      for (std::size_t i = start; i < end; ++i) {
        xb.push_back(&inputs[order[i]]);
        yb.push_back(&targets[order[i]]);
      }
      grads.for_each([](const std::string&, Tensor<float>& t) { t.fill(0.0f); });
      Tape<float> tape;
      const auto out =
          network_forward(tape, params, cfg, tape.constant(stack_batch(xb)), &grads, sched.beta > 0.0);
      const Var<float> loss = ag::multi_supervised_loss(out.final, out.intermediates,
                                                        tape.constant(stack_batch(yb)), static_cast<float>(sched.beta));
      const double lv = loss.value()[0];
      if (!std::isfinite(lv)) {
        if (write) log.flush();
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(res.steps + 1) + "; checkpoint holds the last completed epoch");
      }
      tape.backward(loss);
      adam_step(param_refs, grad_refs, state, lr, names);
      ++res.steps;
      ++epoch_steps;
      loss_sum += lv * static_cast<double>(end - start);
      seen += end - start;
      if (opt.on_step) opt.on_step(res.steps, lv);
      if (opt.max_steps && res.steps >= opt.max_steps) {
        stop = true;
        break;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    rec.steps = epoch_steps;
    if (!data.val.empty()) {
      const auto [v, b] = validation_psnr(params, cfg, data.val);
      rec.val_psnr = v;
      rec.val_bicubic_psnr = b;
    }
    res.final.epoch = epoch;
    res.log.push_back(rec);
    const double metric = rec.val_psnr ? *rec.val_psnr : -rec.train_loss;
    const bool improved = metric > best_metric;
    if (improved) {
      best_metric = metric;
      res.best = res.final;
    }
    if (write) {
      log << to_json(rec).dump() << "\n";
      log.flush();
      save_checkpoint(res.final, opt.out_dir / kCheckpointFile);
      if (improved) save_checkpoint(res.final, opt.out_dir / kBestCheckpointFile);
    }
    if (opt.on_epoch) opt.on_epoch(rec);
  }
  return res;
}

}  // namespace lcsc
