#pragma once

// Adaptive element-wise fusion of the intermediate outputs Y_1..Y_N.
//
// Starting from M = Y_1, each step i computes a gate
//   alpha_i = sigmoid(C_i * concat(M, Y_{i+1}))
// with a 1x1 kernel C_i and updates M <- alpha_i * M + (1 - alpha_i) * Y_{i+1}.
// Unrolling the recursion gives per-output weight maps
//   W_1 = prod_{i=1}^{N-1} alpha_i
//   W_k = (1 - alpha_{k-1}) prod_{i=k}^{N-1} alpha_i    (2 <= k < N)
//   W_N = 1 - alpha_{N-1}
// which are in [0, 1] and sum to one at every element, so M is a per-pixel
// convex combination of the Y_k.

#include <vector>

#include "lcsc/autograd.hpp"

namespace lcsc {

template <typename T>
struct FusionParams {
  std::vector<ConvKernel<T>> gates;  // N-1 kernels, 1x1, 2c -> c

  // Zero weights and bias: every gate starts at alpha = 0.5.
  static FusionParams zeros(std::size_t outputs, std::size_t channels) {
    FusionParams p;
    for (std::size_t i = 0; i + 1 < outputs; ++i) p.gates.push_back(ConvKernel<T>::zeros(channels, 2 * channels, 1));
    return p;
  }

  void validate(std::size_t outputs, std::size_t channels) const {
    const std::size_t expected = outputs == 0 ? 0 : outputs - 1;
    if (gates.size() != expected)
      throw ConfigError("fusion: expected " + std::to_string(expected) + " gates, got " +
                        std::to_string(gates.size()));
    for (const auto& g : gates) {
      g.validate();
      if (g.weight.shape() != Shape{channels, 2 * channels, 1, 1})
        throw ConfigError("fusion: gate kernel shape " + g.weight.shape().str() + ", expected " +
                          Shape{channels, 2 * channels, 1, 1}.str());
    }
  }

  template <typename U>
  FusionParams<U> cast() const {
    FusionParams<U> out;
    for (const auto& g : gates) out.gates.push_back(g.template cast<U>());
    return out;
  }

  friend bool operator==(const FusionParams&, const FusionParams&) = default;
};

template <typename T>
struct FusionTrace {
  std::vector<Tensor<T>> alphas;   // N-1
  std::vector<Tensor<T>> weights;  // N
};

template <typename T>
struct FusionVars {
  Var<T> fused;
  std::vector<Var<T>> alphas;
};

namespace detail {
inline void check_outputs(const std::vector<Shape>& shapes) {
  if (shapes.empty()) throw ConfigError("fuse: no intermediate outputs");
  for (const auto& s : shapes)
    if (s != shapes.front()) throw ConfigError("fuse: output shape " + s.str() + " vs " + shapes.front().str());
}
}  // namespace detail

// Tape version; gradients flow into the outputs and the gate kernels.
template <typename T>
FusionVars<T> fuse(const std::vector<Var<T>>& outputs, const std::vector<ConvVars<T>>& gates) {
  std::vector<Shape> shapes;
  for (const auto& y : outputs) shapes.push_back(y.shape());
  detail::check_outputs(shapes);
  if (gates.size() + 1 != outputs.size())
    throw ConfigError("fuse: " + std::to_string(outputs.size()) + " outputs need " +
                      std::to_string(outputs.size() - 1) + " gates, got " + std::to_string(gates.size()));
  FusionVars<T> r{outputs.front(), {}};
  for (std::size_t i = 0; i + 1 < outputs.size(); ++i) {
    const Var<T>& next = outputs[i + 1];
    Var<T> alpha = ag::sigmoid(ag::conv2d(ag::concat_channels(r.fused, next), gates[i], 0));
    r.fused = ag::add(ag::mul(alpha, r.fused), ag::mul(ag::one_minus(alpha), next));
    r.alphas.push_back(alpha);
  }
  return r;
}

template <typename T>
std::vector<Tensor<T>> derive_weights(const std::vector<Tensor<T>>& alphas, std::size_t outputs) {
  if (outputs == 0) throw ConfigError("derive_weights: no outputs");
  if (alphas.size() + 1 != outputs)
    throw ConfigError("derive_weights: " + std::to_string(outputs) + " outputs need " +
                      std::to_string(outputs - 1) + " alphas, got " + std::to_string(alphas.size()));
  if (outputs == 1) return {};
  const Shape s = alphas.front().shape();
  std::vector<Tensor<T>> w(outputs, Tensor<T>(s));
  // suffix[k] = prod_{i=k}^{N-1} alpha_i  (1-based i), built from the back.
  Tensor<T> suffix(s, T(1));
  for (std::size_t k = outputs; k-- > 1;) {
    const Tensor<T>& a = alphas[k - 1];  // alpha_k
    if (k == outputs - 1) {
      for (std::size_t j = 0; j < s.size(); ++j) w[outputs - 1][j] = T(1) - a[j];
    } else {
      for (std::size_t j = 0; j < s.size(); ++j) w[k][j] = (T(1) - a[j]) * suffix[j];
    }
    for (std::size_t j = 0; j < s.size(); ++j) suffix[j] *= a[j];
  }
  w[0] = suffix;
  return w;
}

// Plain evaluation. The trace carries every alpha_i and the unrolled weights.
template <typename T>
std::pair<Tensor<T>, FusionTrace<T>> fuse(const std::vector<Tensor<T>>& outputs, const FusionParams<T>& params) {
  std::vector<Shape> shapes;
  for (const auto& y : outputs) shapes.push_back(y.shape());
  detail::check_outputs(shapes);
  params.validate(outputs.size(), outputs.front().shape().c);
  Tape<T> tape;
  std::vector<Var<T>> ys;
  for (const auto& y : outputs) ys.push_back(tape.constant(y));
  std::vector<ConvVars<T>> gates;
  for (const auto& g : params.gates) gates.push_back(bind(tape, g));
  auto r = fuse(ys, gates);
  FusionTrace<T> trace;
  for (const auto& a : r.alphas) trace.alphas.push_back(a.value());
  if (outputs.size() == 1)
    trace.weights.push_back(Tensor<T>(outputs.front().shape(), T(1)));
  else
    trace.weights = derive_weights(trace.alphas, outputs.size());
  return {r.fused.value(), std::move(trace)};
}

}  // namespace lcsc
