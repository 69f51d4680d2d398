#pragma once

// Central finite-difference gradient checking. The numerical side only ever
// evaluates the forward pass, so it stays independent of the backward code
// it checks.

#include <cmath>
#include <functional>
#include <vector>

#include "lcsc/autograd.hpp"
#include "lcsc/network.hpp"

namespace lcsc {

struct GradCheckResult {
  double rel_error = 0.0;  // ||analytic - numeric||_2 / max(||analytic||_2, ||numeric||_2)
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
  std::size_t entries = 0;
};

// `loss` builds a scalar on the tape from one Var per input tensor.
using LossBuilder = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

inline double evaluate_loss(const LossBuilder& loss, const std::vector<Tensor<double>>& inputs) {
  Tape<double> tape;
  std::vector<Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  return loss(tape, vars).value()[0];
}

inline std::vector<Tensor<double>> analytic_gradients(const LossBuilder& loss,
                                                      const std::vector<Tensor<double>>& inputs) {
  Tape<double> tape;
  std::vector<Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(tape.leaf(t));
  tape.backward(loss(tape, vars));
  std::vector<Tensor<double>> grads;
  for (const auto& v : vars) grads.push_back(tape.grad(v));
  return grads;
}

inline std::vector<Tensor<double>> numeric_gradients(const LossBuilder& loss, std::vector<Tensor<double>> inputs,
                                                     double step = 1e-4) {
  std::vector<Tensor<double>> grads;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor<double> g(inputs[k].shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double orig = inputs[k][i];
      inputs[k][i] = orig + step;
      const double up = evaluate_loss(loss, inputs);
      inputs[k][i] = orig - step;
      const double down = evaluate_loss(loss, inputs);
      inputs[k][i] = orig;
      g[i] = (up - down) / (2.0 * step);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

inline GradCheckResult compare_gradients(const std::vector<Tensor<double>>& analytic,
                                         const std::vector<Tensor<double>>& numeric) {
  GradCheckResult r;
  double diff2 = 0, a2 = 0, n2 = 0;
  for (std::size_t k = 0; k < analytic.size(); ++k)
    for (std::size_t i = 0; i < analytic[k].size(); ++i) {
      const double a = analytic[k][i], n = numeric[k][i];
      diff2 += (a - n) * (a - n);
      a2 += a * a;
      n2 += n * n;
      ++r.entries;
    }
  r.analytic_norm = std::sqrt(a2);
  r.numeric_norm = std::sqrt(n2);
  const double scale = std::max(r.analytic_norm, r.numeric_norm);
  r.rel_error = scale > 0 ? std::sqrt(diff2) / scale : std::sqrt(diff2);
  return r;
}

inline GradCheckResult gradcheck(const LossBuilder& loss, const std::vector<Tensor<double>>& inputs,
                                 double step = 1e-4) {
  return compare_gradients(analytic_gradients(loss, inputs), numeric_gradients(loss, inputs, step));
}

// Scalar objective over the outputs of a whole network.
using NetworkLoss = std::function<Var<double>(Tape<double>&, const NetworkOutputs<double>&)>;

// Checks d(loss)/d(theta) for every stored parameter of a network.
inline GradCheckResult network_gradcheck(const NetworkParams<double>& params, const NetworkConfig& cfg,
                                         const Tensor<double>& input, const NetworkLoss& loss, double step = 1e-6) {
  auto eval = [&](const NetworkParams<double>& p) {
    Tape<double> tape;
    return loss(tape, network_forward(tape, p, cfg, tape.constant(input))).value()[0];
  };

  NetworkParams<double> grads = NetworkParams<double>::zeros_like(params);
  {
    Tape<double> tape;
    tape.backward(loss(tape, network_forward(tape, params, cfg, tape.constant(input), &grads)));
  }
  std::vector<Tensor<double>> analytic;
  grads.for_each([&](const std::string&, const Tensor<double>& t) { analytic.push_back(t); });

  NetworkParams<double> probe = params;
  std::vector<Tensor<double>*> slots;
  probe.for_each([&](const std::string&, Tensor<double>& t) { slots.push_back(&t); });
  std::vector<Tensor<double>> numeric;
  for (Tensor<double>* t : slots) {
    Tensor<double> g(t->shape());
    for (std::size_t i = 0; i < t->size(); ++i) {
      const double orig = (*t)[i];
      (*t)[i] = orig + step;
      const double up = eval(probe);
      (*t)[i] = orig - step;
      const double down = eval(probe);
      (*t)[i] = orig;
      g[i] = (up - down) / (2.0 * step);
    }
    numeric.push_back(std::move(g));
  }
  return compare_gradients(analytic, numeric);
}

}  // namespace lcsc
