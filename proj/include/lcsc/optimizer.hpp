#pragma once

// Adam with bias correction and the step-decay learning-rate schedule.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lcsc/network.hpp"

namespace lcsc {

struct TrainSchedule {
  double initial_lr = 1e-4;
  std::size_t decay_every = 15;  // epochs
  double decay_factor = 0.1;
  std::size_t total_epochs = 60;
  std::size_t batch_size = 16;
  double beta = 1.0;  // weight of the per-output supervision terms

  void validate() const {
    if (!(initial_lr > 0.0) || !std::isfinite(initial_lr)) throw ConfigError("initial_lr must be positive");
    if (decay_every < 1) throw ConfigError("decay_every must be >= 1");
    if (!(decay_factor > 0.0 && decay_factor < 1.0)) throw ConfigError("decay_factor must be in (0,1)");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be >= 0");
  }

  // Epochs are 1-based: epochs 1..decay_every run at initial_lr.
  double lr_at_epoch(std::size_t epoch) const {
    if (epoch < 1) throw ConfigError("epochs are numbered from 1");
    const auto drops = static_cast<double>((epoch - 1) / decay_every);
    return initial_lr * std::pow(decay_factor, drops);
  }

  friend bool operator==(const TrainSchedule&, const TrainSchedule&) = default;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

template <typename T>
struct AdamState {
  AdamConfig hyper;
  std::uint64_t step = 0;
  std::vector<Tensor<T>> m;  // one per parameter tensor, in visiting order
  std::vector<Tensor<T>> v;

  static AdamState for_tensors(const std::vector<Tensor<T>*>& params, AdamConfig hyper = {}) {
    AdamState s;
    s.hyper = hyper;
    for (const auto* p : params) {
      s.m.emplace_back(p->shape());
      s.v.emplace_back(p->shape());
    }
    return s;
  }

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

template <typename T>
std::vector<Tensor<T>*> tensor_refs(NetworkParams<T>& p) {
  std::vector<Tensor<T>*> out;
  p.for_each([&](const std::string&, Tensor<T>& t) { out.push_back(&t); });
  return out;
}

template <typename T>
std::vector<const Tensor<T>*> tensor_refs(const NetworkParams<T>& p) {
  std::vector<const Tensor<T>*> out;
  p.for_each([&](const std::string&, const Tensor<T>& t) { out.push_back(&t); });
  return out;
}

template <typename T>
std::vector<std::string> tensor_names(const NetworkParams<T>& p) {
  std::vector<std::string> out;
  p.for_each([&](const std::string& name, const Tensor<T>&) { out.push_back(name); });
  return out;
}

template <typename T>
AdamState<T> adam_init(NetworkParams<T>& p, AdamConfig hyper = {}) {
  return AdamState<T>::for_tensors(tensor_refs(p), hyper);
}

// One bias-corrected Adam update. Gradients are checked before anything is
// modified, so a non-finite gradient leaves params and state untouched.
template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads, AdamState<T>& s,
               double lr, const std::vector<std::string>& names = {}) {
  if (grads.size() != params.size() || s.m.size() != params.size() || s.v.size() != params.size())
    throw ConfigError("adam_step: " + std::to_string(params.size()) + " params, " + std::to_string(grads.size()) +
                      " grads, " + std::to_string(s.m.size()) + " moments");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i]->shape() != params[i]->shape() || s.m[i].shape() != params[i]->shape())
      throw ConfigError("adam_step: shape mismatch at tensor " + std::to_string(i));
    if (!grads[i]->all_finite())
      throw NumericError("non-finite gradient in " + (i < names.size() ? names[i] : "tensor " + std::to_string(i)) +
                         " at step " + std::to_string(s.step + 1));
  }
  ++s.step;
  const double b1 = s.hyper.beta1, b2 = s.hyper.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    const auto g = grads[i]->data();
    auto m = s.m[i].data();
    auto v = s.v[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      const double mj = b1 * m[j] + (1.0 - b1) * gj;
      const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      p[j] = static_cast<T>(p[j] - lr * (mj / c1) / (std::sqrt(vj / c2) + s.hyper.eps));
    }
  }
}

template <typename T>
void adam_step(NetworkParams<T>& params, const NetworkParams<T>& grads, AdamState<T>& s, double lr) {
  adam_step(tensor_refs(params), tensor_refs(grads), s, lr, tensor_names(params));
}

}  // namespace lcsc
