#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lcsc/error.hpp"

namespace lcsc {

// (batch, channels, height, width). For convolution weights the same four
// slots hold (out_channels, in_channels, kh, kw).
struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  constexpr std::size_t size() const { return n * c * h * w; }
  constexpr std::size_t plane() const { return h * w; }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;

  std::string str() const {
    std::ostringstream os;
    os << '(' << n << ',' << c << ',' << h << ',' << w << ')';
    return os.str();
  }
};

// Portable deterministic random source. Distributions are computed here
// rather than through <random> so that streams are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(bound)) % bound;
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Dense 4-D array, row-major with the width axis fastest.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(shape.size(), fill) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size())
      throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_.str());
  }

  static Tensor zeros(Shape shape) { return Tensor(shape); }
  static Tensor filled(Shape shape, T v) { return Tensor(shape, v); }
  static Tensor uniform(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(shape);
    for (auto& v : t.data_) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
  }
  static Tensor normal(Shape shape, Rng& rng, double stddev = 1.0) {
    Tensor t(shape);
    for (auto& v : t.data_) v = static_cast<T>(stddev * rng.normal());
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t offset(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    return ((b * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  T& at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) { return data_[offset(b, c, y, x)]; }
  const T& at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[offset(b, c, y, x)];
  }

  // Pointer to the (b, c) plane.
  T* plane(std::size_t b, std::size_t c) { return data_.data() + (b * shape_.c + c) * shape_.plane(); }
  const T* plane(std::size_t b, std::size_t c) const {
    return data_.data() + (b * shape_.c + c) * shape_.plane();
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor& operator+=(const Tensor& o) {
    if (o.shape_ != shape_) throw ConfigError("tensor add: shape " + shape_.str() + " vs " + o.shape_.str());
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
    return Tensor<U>(shape_, std::move(out));
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

// Convolution weights (out, in, kh, kw) plus a per-output-channel bias.
template <typename T>
struct ConvKernel {
  Tensor<T> weight;
  Tensor<T> bias;  // shape (1, out, 1, 1)

  ConvKernel() = default;
  ConvKernel(Tensor<T> w, Tensor<T> b) : weight(std::move(w)), bias(std::move(b)) { validate(); }

  static ConvKernel zeros(std::size_t out, std::size_t in, std::size_t k) {
    return ConvKernel(Tensor<T>(Shape{out, in, k, k}), Tensor<T>(Shape{1, out, 1, 1}));
  }

  // 1x1 kernel whose channel matrix is the identity.
  static ConvKernel identity(std::size_t n) {
    auto k = zeros(n, n, 1);
    for (std::size_t i = 0; i < n; ++i) k.weight.at(i, i, 0, 0) = T(1);
    return k;
  }

  // Uniform He initialisation: U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero bias.
  static ConvKernel he_uniform(std::size_t out, std::size_t in, std::size_t k, Rng& rng) {
    auto kern = zeros(out, in, k);
    const double fan_in = static_cast<double>(in * k * k);
    const double bound = fan_in > 0 ? std::sqrt(6.0 / fan_in) : 0.0;
    for (auto& v : kern.weight.data()) v = static_cast<T>(rng.uniform(-bound, bound));
    return kern;
  }

  static ConvKernel random(std::size_t out, std::size_t in, std::size_t k, Rng& rng, double scale = 1.0) {
    return ConvKernel(Tensor<T>::uniform(Shape{out, in, k, k}, rng, -scale, scale),
                      Tensor<T>::uniform(Shape{1, out, 1, 1}, rng, -scale, scale));
  }

  std::size_t out_channels() const { return weight.shape().n; }
  std::size_t in_channels() const { return weight.shape().c; }
  std::size_t kh() const { return weight.shape().h; }
  std::size_t kw() const { return weight.shape().w; }
  std::size_t param_count(bool with_bias = true) const {
    return weight.size() + (with_bias ? bias.size() : 0);
  }

  void validate() const {
    const auto& s = weight.shape();
    if (s.n < 1) throw ConfigError("conv kernel needs at least one output channel");
    if (!((s.h == 1 && s.w == 1) || (s.h == 3 && s.w == 3)))
      throw ConfigError("conv kernel must be 1x1 or 3x3, got " + s.str());
    if (bias.shape() != Shape{1, s.n, 1, 1})
      throw ConfigError("conv bias shape " + bias.shape().str() + " does not match kernel " + s.str());
  }

  template <typename U>
  ConvKernel<U> cast() const {
    return ConvKernel<U>(weight.template cast<U>(), bias.template cast<U>());
  }

  friend bool operator==(const ConvKernel&, const ConvKernel&) = default;
};

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw ConfigError("compare: shape " + a.shape().str() + " vs " + b.shape().str());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

template <typename T>
double max_abs(const Tensor<T>& a) {
  double m = 0.0;
  for (auto v : a.data()) m = std::max(m, std::abs(static_cast<double>(v)));
  return m;
}

// max|a-b| / max(max|a|, max|b|): infinity-norm relative error.
template <typename T>
double relative_error(const Tensor<T>& a, const Tensor<T>& b) {
  const double diff = max_abs_diff(a, b);
  const double scale = std::max(max_abs(a), max_abs(b));
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace lcsc
