#pragma once

// Forward and backward kernels for the neural primitives. Everything here is
// a pure function of its arguments; the autograd layer wires the backward
// halves together.

#include <algorithm>
#include <cmath>
#include <limits>

#include "lcsc/tensor.hpp"

namespace lcsc {

namespace detail {

// Range of output rows/cols [lo, hi) for which input index o + k - pad is in [0, n).
inline void valid_range(std::size_t out_n, std::size_t in_n, std::size_t k, std::size_t pad,
                        std::size_t& lo, std::size_t& hi) {
  const long long shift = static_cast<long long>(k) - static_cast<long long>(pad);
  long long l = std::max<long long>(0, -shift);
  long long h = std::min<long long>(static_cast<long long>(out_n), static_cast<long long>(in_n) - shift);
  if (h < l) h = l;
  lo = static_cast<std::size_t>(l);
  hi = static_cast<std::size_t>(h);
}

inline std::size_t conv_out_extent(std::size_t in, std::size_t k, std::size_t pad) {
  const long long o = static_cast<long long>(in) + 2 * static_cast<long long>(pad) - static_cast<long long>(k) + 1;
  return o > 0 ? static_cast<std::size_t>(o) : 0;
}

}  // namespace detail

template <typename T>
void check_conv_shapes(const Shape& input, const ConvKernel<T>& kernel, std::size_t padding) {
  kernel.validate();
  if (input.c != kernel.in_channels())
    throw ConfigError("conv2d: input shape " + input.str() + " does not match kernel shape " +
                      kernel.weight.shape().str());
  if (detail::conv_out_extent(input.h, kernel.kh(), padding) == 0 ||
      detail::conv_out_extent(input.w, kernel.kw(), padding) == 0)
    throw ConfigError("conv2d: input shape " + input.str() + " too small for kernel shape " +
                      kernel.weight.shape().str());
}

// Stride-1 cross-correlation (no kernel flip) plus bias.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const ConvKernel<T>& kernel, std::size_t padding) {
  check_conv_shapes(input.shape(), kernel, padding);
  const Shape& is = input.shape();
  const std::size_t kh = kernel.kh(), kw = kernel.kw();
  const std::size_t oh = detail::conv_out_extent(is.h, kh, padding);
  const std::size_t ow = detail::conv_out_extent(is.w, kw, padding);
  const std::size_t oc_n = kernel.out_channels();
  Tensor<T> out(Shape{is.n, oc_n, oh, ow});
  for (std::size_t b = 0; b < is.n; ++b) {
    for (std::size_t oc = 0; oc < oc_n; ++oc) {
      T* o = out.plane(b, oc);
      std::fill(o, o + oh * ow, kernel.bias[oc]);
      for (std::size_t ic = 0; ic < is.c; ++ic) {
        const T* in = input.plane(b, ic);
        for (std::size_t ky = 0; ky < kh; ++ky) {
          std::size_t y0, y1;
          detail::valid_range(oh, is.h, ky, padding, y0, y1);
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const T wv = kernel.weight.at(oc, ic, ky, kx);
            if (wv == T(0)) continue;
            std::size_t x0, x1;
            detail::valid_range(ow, is.w, kx, padding, x0, x1);
            for (std::size_t y = y0; y < y1; ++y) {
              T* orow = o + y * ow;
              const T* irow = in + (y + ky - padding) * is.w;
              for (std::size_t x = x0; x < x1; ++x) orow[x] += wv * irow[x + kx - padding];
            }
          }
        }
      }
    }
  }
  return out;
}

// d(loss)/d(input) given d(loss)/d(output).
template <typename T>
Tensor<T> conv2d_backward_input(const Tensor<T>& grad_out, const Tensor<T>& weight, const Shape& input_shape,
                                std::size_t padding) {
  const Shape& ws = weight.shape();
  const Shape& gs = grad_out.shape();
  Tensor<T> grad_in(input_shape);
  for (std::size_t b = 0; b < input_shape.n; ++b) {
    for (std::size_t oc = 0; oc < ws.n; ++oc) {
      const T* g = grad_out.plane(b, oc);
      for (std::size_t ic = 0; ic < ws.c; ++ic) {
        T* gi = grad_in.plane(b, ic);
        for (std::size_t ky = 0; ky < ws.h; ++ky) {
          std::size_t y0, y1;
          detail::valid_range(gs.h, input_shape.h, ky, padding, y0, y1);
          for (std::size_t kx = 0; kx < ws.w; ++kx) {
            const T wv = weight.at(oc, ic, ky, kx);
            if (wv == T(0)) continue;
            std::size_t x0, x1;
            detail::valid_range(gs.w, input_shape.w, kx, padding, x0, x1);
            for (std::size_t y = y0; y < y1; ++y) {
              const T* grow = g + y * gs.w;
              T* irow = gi + (y + ky - padding) * input_shape.w;
              for (std::size_t x = x0; x < x1; ++x) irow[x + kx - padding] += wv * grow[x];
            }
          }
        }
      }
    }
  }
  return grad_in;
}

// Accumulates weight and bias gradients into grad_weight / grad_bias.
template <typename T>
void conv2d_backward_params(const Tensor<T>& grad_out, const Tensor<T>& input, std::size_t padding,
                            Tensor<T>& grad_weight, Tensor<T>& grad_bias) {
  const Shape& ws = grad_weight.shape();
  const Shape& gs = grad_out.shape();
  const Shape& is = input.shape();
  for (std::size_t oc = 0; oc < ws.n; ++oc) {
    T bsum = 0;
    for (std::size_t b = 0; b < gs.n; ++b) {
      const T* g = grad_out.plane(b, oc);
      for (std::size_t i = 0; i < gs.plane(); ++i) bsum += g[i];
    }
    grad_bias[oc] += bsum;
    for (std::size_t ic = 0; ic < ws.c; ++ic) {
      for (std::size_t ky = 0; ky < ws.h; ++ky) {
        std::size_t y0, y1;
        detail::valid_range(gs.h, is.h, ky, padding, y0, y1);
        for (std::size_t kx = 0; kx < ws.w; ++kx) {
          std::size_t x0, x1;
          detail::valid_range(gs.w, is.w, kx, padding, x0, x1);
          T acc = 0;
          for (std::size_t b = 0; b < gs.n; ++b) {
            const T* g = grad_out.plane(b, oc);
            const T* in = input.plane(b, ic);
            for (std::size_t y = y0; y < y1; ++y) {
              const T* grow = g + y * gs.w;
              const T* irow = in + (y + ky - padding) * is.w;
              for (std::size_t x = x0; x < x1; ++x) acc += grow[x] * irow[x + kx - padding];
            }
          }
          grad_weight.at(oc, ic, ky, kx) += acc;
        }
      }
    }
  }
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T(0) ? input[i] : T(0);
  return out;
}

// Gradient of ReLU; the subgradient at exactly 0 is taken as 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& input) {
  Tensor<T> g(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) g[i] = input[i] > T(0) ? grad_out[i] : T(0);
  return g;
}

// Logistic function, clamped so the result is strictly inside (0, 1) even
// where the exact value rounds to 0 or 1.
template <typename T>
T sigmoid_scalar(T x) {
  constexpr T lo = std::numeric_limits<T>::min();
  constexpr T hi = T(1) - std::numeric_limits<T>::epsilon() / T(2);
  T s;
  if (x >= T(0)) {
    s = T(1) / (T(1) + std::exp(-x));
  } else {
    const T e = std::exp(x);
    s = e / (T(1) + e);
  }
  return std::clamp(s, lo, hi);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input) {
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = sigmoid_scalar(input[i]);
  return out;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
    throw ConfigError("concat_channels: shape " + sa.str() + " vs " + sb.str());
  Tensor<T> out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t p = sa.plane();
  for (std::size_t n = 0; n < sa.n; ++n) {
    std::copy_n(a.plane(n, 0), sa.c * p, out.plane(n, 0));
    std::copy_n(b.plane(n, 0), sb.c * p, out.plane(n, sa.c));
  }
  return out;
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& t, std::size_t begin, std::size_t count) {
  const Shape& s = t.shape();
  if (begin + count > s.c)
    throw ConfigError("slice_channels: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                      ") out of range for " + s.str());
  Tensor<T> out(Shape{s.n, count, s.h, s.w});
  for (std::size_t n = 0; n < s.n; ++n) std::copy_n(t.plane(n, begin), count * s.plane(), out.plane(n, 0));
  return out;
}

template <typename T>
Tensor<T> nearest_upsample(const Tensor<T>& input, std::size_t factor) {
  if (factor < 2) throw ConfigError("nearest_upsample: factor must be >= 2, got " + std::to_string(factor));
  const Shape& s = input.shape();
  Tensor<T> out(Shape{s.n, s.c, s.h * factor, s.w * factor});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* in = input.plane(n, c);
      T* o = out.plane(n, c);
      const std::size_t ow = s.w * factor;
      for (std::size_t y = 0; y < s.h * factor; ++y)
        for (std::size_t x = 0; x < ow; ++x) o[y * ow + x] = in[(y / factor) * s.w + x / factor];
    }
  return out;
}

// Sums each factor x factor cell: the adjoint of nearest_upsample.
template <typename T>
Tensor<T> nearest_upsample_backward(const Tensor<T>& grad_out, std::size_t factor) {
  const Shape& g = grad_out.shape();
  Tensor<T> out(Shape{g.n, g.c, g.h / factor, g.w / factor});
  for (std::size_t n = 0; n < g.n; ++n)
    for (std::size_t c = 0; c < g.c; ++c) {
      const T* gi = grad_out.plane(n, c);
      T* o = out.plane(n, c);
      for (std::size_t y = 0; y < g.h; ++y)
        for (std::size_t x = 0; x < g.w; ++x) o[(y / factor) * (g.w / factor) + x / factor] += gi[y * g.w + x];
    }
  return out;
}

// Picks the top-left sample of every factor x factor cell.
template <typename T>
Tensor<T> stride_downsample(const Tensor<T>& input, std::size_t factor) {
  const Shape& s = input.shape();
  Tensor<T> out(Shape{s.n, s.c, s.h / factor, s.w / factor});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t y = 0; y < s.h / factor; ++y)
        for (std::size_t x = 0; x < s.w / factor; ++x) out.at(n, c, y, x) = input.at(n, c, y * factor, x * factor);
  return out;
}

// Depth-to-space: output channel c, cell offset (dy, dx) reads input channel
// c*r*r + dy*r + dx.
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& input, std::size_t r) {
  const Shape& s = input.shape();
  if (r < 1 || s.c % (r * r) != 0)
    throw ConfigError("pixel_shuffle: channels of " + s.str() + " not divisible by r^2 = " + std::to_string(r * r));
  const std::size_t oc = s.c / (r * r);
  Tensor<T> out(Shape{s.n, oc, s.h * r, s.w * r});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < oc; ++c)
      for (std::size_t dy = 0; dy < r; ++dy)
        for (std::size_t dx = 0; dx < r; ++dx) {
          const T* in = input.plane(n, c * r * r + dy * r + dx);
          T* o = out.plane(n, c);
          for (std::size_t y = 0; y < s.h; ++y)
            for (std::size_t x = 0; x < s.w; ++x) o[(y * r + dy) * (s.w * r) + x * r + dx] = in[y * s.w + x];
        }
  return out;
}

// Space-to-depth, the exact inverse of pixel_shuffle (and its adjoint).
template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& input, std::size_t r) {
  const Shape& s = input.shape();
  if (r < 1 || s.h % r != 0 || s.w % r != 0)
    throw ConfigError("pixel_unshuffle: spatial size of " + s.str() + " not divisible by " + std::to_string(r));
  const std::size_t h = s.h / r, w = s.w / r;
  Tensor<T> out(Shape{s.n, s.c * r * r, h, w});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t dy = 0; dy < r; ++dy)
        for (std::size_t dx = 0; dx < r; ++dx) {
          T* o = out.plane(n, c * r * r + dy * r + dx);
          const T* in = input.plane(n, c);
          for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) o[y * w + x] = in[(y * r + dy) * s.w + x * r + dx];
        }
  return out;
}

namespace detail {
inline void require_same(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw ConfigError(std::string(op) + ": shape " + a.str() + " vs " + b.str());
}
}  // namespace detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same(a.shape(), b.shape(), "add");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same(a.shape(), b.shape(), "sub");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same(a.shape(), b.shape(), "mul");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

}  // namespace lcsc
