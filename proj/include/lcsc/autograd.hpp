#pragma once

// Reverse-mode differentiation over a linear tape. Nodes are appended in
// execution order, so walking the tape backwards is a reverse topological
// order and every node is visited exactly once.

#include <functional>
#include <utility>
#include <vector>

#include "lcsc/primitives.hpp"

namespace lcsc {

template <typename T>
class Tape;

template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(*this); }
  const Shape& shape() const { return value().shape(); }
};

template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor<T>& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value) { return push(std::move(value), false, nullptr, {}); }

  // A differentiable input. When `sink` is given, the gradient reaching this
  // leaf is added to *sink during backward().
  Var<T> leaf(Tensor<T> value, Tensor<T>* sink = nullptr) { return push(std::move(value), true, sink, {}); }

  // Records the output of an operation. `fn` is only stored when at least
  // one of `inputs` requires a gradient.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, Backward fn) {
    bool needs = false;
    for (const auto& v : inputs) needs = needs || nodes_[v.id].requires_grad;
    return push(std::move(value), needs, nullptr, needs ? std::move(fn) : Backward{});
  }

  const Tensor<T>& value(Var<T> v) const { return nodes_[v.id].value; }
  bool requires_grad(Var<T> v) const { return nodes_[v.id].requires_grad; }

  // Gradient accumulated at `v` by the last backward(); zeros if none reached it.
  Tensor<T> grad(Var<T> v) const {
    const auto& n = nodes_[v.id];
    return n.grad.empty() ? Tensor<T>(n.value.shape()) : n.grad;
  }

  void accumulate(Var<T> v, Tensor<T> g) {
    auto& n = nodes_[v.id];
    if (!n.requires_grad) return;
    if (n.grad.empty())
      n.grad = std::move(g);
    else
      n.grad += g;
  }

  // Propagates d(loss)/d(node) to every node recorded before `loss`.
  // Returns the number of nodes whose backward step ran.
  std::size_t backward(Var<T> loss) {
    if (value(loss).size() != 1)
      throw ConfigError("backward: loss must be scalar, got shape " + value(loss).shape().str());
    for (auto& n : nodes_) n.grad = Tensor<T>();
    nodes_[loss.id].grad = Tensor<T>(value(loss).shape(), T(1));
    std::size_t visited = 0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty()) continue;
      ++visited;
      if (n.sink) *n.sink += n.grad;
      if (n.backward) {
        // Closures only touch nodes recorded before i. Interior gradients are
        // released once propagated; leaf gradients stay readable via grad().
        n.backward(*this, n.grad);
        n.grad = Tensor<T>();
      }
    }
    return visited;
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    Tensor<T>* sink = nullptr;
    Backward backward;
  };

  Var<T> push(Tensor<T> value, bool requires_grad, Tensor<T>* sink, Backward fn) {
    nodes_.push_back(Node{std::move(value), Tensor<T>(), requires_grad, sink, std::move(fn)});
    return Var<T>{this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
};

template <typename T>
struct ConvVars {
  Var<T> weight;
  Var<T> bias;
};

// Puts a kernel on the tape. With `grads`, the kernel becomes differentiable
// and its gradients accumulate into *grads (which must have matching shapes).
template <typename T>
ConvVars<T> bind(Tape<T>& tape, const ConvKernel<T>& k, ConvKernel<T>* grads = nullptr) {
  if (grads == nullptr) return {tape.constant(k.weight), tape.constant(k.bias)};
  if (grads->weight.shape() != k.weight.shape()) *grads = ConvKernel<T>::zeros(k.out_channels(), k.in_channels(), k.kh());
  return {tape.leaf(k.weight, &grads->weight), tape.leaf(k.bias, &grads->bias)};
}

namespace ag {

template <typename T>
Var<T> conv2d(Var<T> x, ConvVars<T> k, std::size_t padding) {
  Tape<T>& tape = *x.tape;
  ConvKernel<T> kern(k.weight.value(), k.bias.value());
  Tensor<T> out = lcsc::conv2d(x.value(), kern, padding);
  return tape.record(std::move(out), {x, k.weight, k.bias}, [x, k, padding](Tape<T>& t, const Tensor<T>& g) {
    if (t.requires_grad(x)) t.accumulate(x, conv2d_backward_input(g, k.weight.value(), x.shape(), padding));
    if (t.requires_grad(k.weight) || t.requires_grad(k.bias)) {
      Tensor<T> gw(k.weight.shape()), gb(k.bias.shape());
      conv2d_backward_params(g, x.value(), padding, gw, gb);
      t.accumulate(k.weight, std::move(gw));
      t.accumulate(k.bias, std::move(gb));
    }
  });
}

// Same-size convolution: padding 1 for 3x3, 0 for 1x1.
template <typename T>
Var<T> conv_same(Var<T> x, ConvVars<T> k) {
  return conv2d(x, k, (k.weight.shape().h - 1) / 2);
}

template <typename T>
Var<T> relu(Var<T> x) {
  return x.tape->record(lcsc::relu(x.value()), {x},
                        [x](Tape<T>& t, const Tensor<T>& g) { t.accumulate(x, relu_backward(g, x.value())); });
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  Tape<T>& tape = *x.tape;
  const Var<T> self{&tape, tape.size()};
  return tape.record(lcsc::sigmoid(x.value()), {x}, [x, self](Tape<T>& t, const Tensor<T>& g) {
    const Tensor<T>& y = self.value();
    Tensor<T> gx(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] = g[i] * y[i] * (T(1) - y[i]);
    t.accumulate(x, std::move(gx));
  });
}

template <typename T>
Var<T> concat_channels(Var<T> a, Var<T> b) {
  const std::size_t ca = a.shape().c, cb = b.shape().c;
  return a.tape->record(lcsc::concat_channels(a.value(), b.value()), {a, b},
                        [a, b, ca, cb](Tape<T>& t, const Tensor<T>& g) {
                          if (t.requires_grad(a)) t.accumulate(a, slice_channels(g, 0, ca));
                          if (t.requires_grad(b)) t.accumulate(b, slice_channels(g, ca, cb));
                        });
}

template <typename T>
Var<T> slice_channels(Var<T> x, std::size_t begin, std::size_t count) {
  return x.tape->record(lcsc::slice_channels(x.value(), begin, count), {x},
                        [x, begin, count](Tape<T>& t, const Tensor<T>& g) {
                          Tensor<T> gx(x.shape());
                          const Shape& s = x.shape();
                          for (std::size_t n = 0; n < s.n; ++n)
                            std::copy_n(g.plane(n, 0), count * s.plane(), gx.plane(n, begin));
                          t.accumulate(x, std::move(gx));
                        });
}

template <typename T>
Var<T> nearest_upsample(Var<T> x, std::size_t factor) {
  return x.tape->record(lcsc::nearest_upsample(x.value(), factor), {x}, [x, factor](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(x, nearest_upsample_backward(g, factor));
  });
}

template <typename T>
Var<T> pixel_shuffle(Var<T> x, std::size_t r) {
  return x.tape->record(lcsc::pixel_shuffle(x.value(), r), {x},
                        [x, r](Tape<T>& t, const Tensor<T>& g) { t.accumulate(x, pixel_unshuffle(g, r)); });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  return a.tape->record(lcsc::add(a.value(), b.value()), {a, b}, [a, b](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  return a.tape->record(lcsc::sub(a.value(), b.value()), {a, b}, [a, b](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(a, g);
    if (t.requires_grad(b)) t.accumulate(b, lcsc::scale(g, T(-1)));
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  return a.tape->record(lcsc::mul(a.value(), b.value()), {a, b}, [a, b](Tape<T>& t, const Tensor<T>& g) {
    if (t.requires_grad(a)) t.accumulate(a, lcsc::mul(g, b.value()));
    if (t.requires_grad(b)) t.accumulate(b, lcsc::mul(g, a.value()));
  });
}

// 1 - x
template <typename T>
Var<T> one_minus(Var<T> x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(1) - x.value()[i];
  return x.tape->record(std::move(out), {x},
                        [x](Tape<T>& t, const Tensor<T>& g) { t.accumulate(x, lcsc::scale(g, T(-1))); });
}

template <typename T>
Var<T> scale(Var<T> x, T s) {
  return x.tape->record(lcsc::scale(x.value(), s), {x},
                        [x, s](Tape<T>& t, const Tensor<T>& g) { t.accumulate(x, lcsc::scale(g, s)); });
}

// Sum of all elements as a (1,1,1,1) tensor.
template <typename T>
Var<T> sum(Var<T> x) {
  T acc = 0;
  for (auto v : x.value().data()) acc += v;
  return x.tape->record(Tensor<T>(Shape{1, 1, 1, 1}, acc), {x}, [x](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(x, Tensor<T>(x.shape(), g[0]));
  });
}

// Mean absolute difference over every element. The gradient of |d| at d == 0
// is taken as 0.
template <typename T>
Var<T> l1_loss(Var<T> pred, Var<T> target) {
  const Tensor<T>& p = pred.value();
  const Tensor<T>& q = target.value();
  if (p.shape() != q.shape()) throw ConfigError("l1_loss: shape " + p.shape().str() + " vs " + q.shape().str());
  if (p.size() == 0) throw ConfigError("l1_loss: empty tensors");
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(static_cast<double>(p[i]) - static_cast<double>(q[i]));
  const T value = static_cast<T>(acc / static_cast<double>(p.size()));
  return pred.tape->record(Tensor<T>(Shape{1, 1, 1, 1}, value), {pred, target},
                           [pred, target](Tape<T>& t, const Tensor<T>& g) {
                             const Tensor<T>& p = pred.value();
                             const Tensor<T>& q = target.value();
                             const T s = g[0] / static_cast<T>(p.size());
                             Tensor<T> gp(p.shape());
                             for (std::size_t i = 0; i < p.size(); ++i) {
                               const T d = p[i] - q[i];
                               gp[i] = d > T(0) ? s : (d < T(0) ? -s : T(0));
                             }
                             if (t.requires_grad(target)) t.accumulate(target, lcsc::scale(gp, T(-1)));
                             if (t.requires_grad(pred)) t.accumulate(pred, std::move(gp));
                           });
}

}  // namespace ag
}  // namespace lcsc
