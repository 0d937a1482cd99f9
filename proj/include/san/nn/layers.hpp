// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "san/core/errors.hpp"
#include "san/core/random.hpp"
#include "san/core/tensor.hpp"

namespace san::nn {

enum class Mode { kTrain, kEval };

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;  // false for running statistics

  Parameter() = default;
  Parameter(std::string n, Shape s, bool train = true)
      : name(std::move(n)), value(s), grad(train ? Tensor<T>(s) : Tensor<T>()), trainable(train) {}
};

template <typename T>
using ParamList = std::vector<Parameter<T>*>;

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
void fill_normal(Tensor<T>& t, Rng& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
}

// 2D convolution lowered to GEMMs over groups of samples (im2col).
template <typename T>
class Conv2d {
 public:
  struct Cache {
    Tensor<T> input;
  };

  Conv2d() = default;
  Conv2d(const std::string& name, int in, int out, int kernel, int stride, int pad, bool bias)
      : in_(in), out_(out), k_(kernel), stride_(stride), pad_(pad),
        weight_(name + ".weight", Shape{out, in, kernel, kernel}) {
    if (bias) bias_ = Parameter<T>(name + ".bias", Shape{1, out, 1, 1});
  }

  void init(Rng& rng, double gain = 2.0) {
    fill_normal(weight_.value, rng, std::sqrt(gain / (in_ * k_ * k_)));
    if (has_bias()) bias_.value.zero();
  }

  bool has_bias() const { return !bias_.name.empty(); }
  int in_channels() const { return in_; }
  int out_channels() const { return out_; }

  Shape output_shape(const Shape& s) const {
    return Shape{s.n, out_, (s.h + 2 * pad_ - k_) / stride_ + 1, (s.w + 2 * pad_ - k_) / stride_ + 1};
  }

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    require_input(x.c() == in_, weight_.name + ": expected " + std::to_string(in_) + " input channels, got " +
                                    x.shape().str());
    const Shape os = output_shape(x.shape());
    const int K = in_ * k_ * k_;
    const int P = os.h * os.w;
    const int group = group_size(K, P, x.n());
    AlignedVector<T> col, prod;
    Tensor<T> y(os);
    for (int n0 = 0; n0 < x.n(); n0 += group) {
      const int g = std::min(group, x.n() - n0);
      const int GP = g * P;
      col.resize(static_cast<std::size_t>(K) * GP);
      im2col(x, n0, g, os, col);
      prod.resize(static_cast<std::size_t>(out_) * GP);
      MatrixMap<T>(prod.data(), out_, GP).noalias() =
          ConstMatrixMap<T>(weight_.value.data(), out_, K) * ConstMatrixMap<T>(col.data(), K, GP);
      for (int j = 0; j < g; ++j)
        for (int co = 0; co < out_; ++co) {
          const T b = has_bias() ? bias_.value[static_cast<std::size_t>(co)] : T(0);
          const T* src = prod.data() + static_cast<std::size_t>(co) * GP + static_cast<std::size_t>(j) * P;
          T* dst = y.data() + y.index(n0 + j, co, 0, 0);
          for (int p = 0; p < P; ++p) dst[p] = src[p] + b;
        }
    }
    if (cache) cache->input = x;
    return y;
  }

  // Accumulates parameter gradients; returns the input gradient unless `input_grad` is false.
  Tensor<T> backward(const Tensor<T>& dy, const Cache& cache, bool input_grad = true) {
    const Tensor<T>& x = cache.input;
    const Shape os = output_shape(x.shape());
    require_input(dy.shape() == os, weight_.name + ": bad output gradient shape " + dy.shape().str());
    const int K = in_ * k_ * k_;
    const int P = os.h * os.w;
    const int group = group_size(K, P, x.n());
    AlignedVector<T> col, dprod, dcol;
    Tensor<T> dx;
    if (input_grad) dx = Tensor<T>(x.shape());
    for (int n0 = 0; n0 < x.n(); n0 += group) {
      const int g = std::min(group, x.n() - n0);
      const int GP = g * P;
      dprod.resize(static_cast<std::size_t>(out_) * GP);
      for (int j = 0; j < g; ++j)
        for (int co = 0; co < out_; ++co)
          std::copy_n(dy.data() + dy.index(n0 + j, co, 0, 0), P,
                      dprod.data() + static_cast<std::size_t>(co) * GP + static_cast<std::size_t>(j) * P);
      ConstMatrixMap<T> dY(dprod.data(), out_, GP);
      col.resize(static_cast<std::size_t>(K) * GP);
      im2col(x, n0, g, os, col);
      MatrixMap<T>(weight_.grad.data(), out_, K).noalias() += dY * ConstMatrixMap<T>(col.data(), K, GP).transpose();
      if (has_bias()) {
        for (int co = 0; co < out_; ++co) bias_.grad[static_cast<std::size_t>(co)] += dY.row(co).sum();
      }
      if (!input_grad) continue;
      dcol.resize(static_cast<std::size_t>(K) * GP);
      MatrixMap<T>(dcol.data(), K, GP).noalias() = ConstMatrixMap<T>(weight_.value.data(), out_, K).transpose() * dY;
      col2im(dcol, n0, g, os, dx);
    }
    return dx;
  }

  void collect(ParamList<T>& out) {
    out.push_back(&weight_);
    if (has_bias()) out.push_back(&bias_);
  }

  std::size_t parameter_count() const { return weight_.value.size() + (has_bias() ? bias_.value.size() : 0); }

 private:
  // Samples per GEMM: keeps the column buffer around 1 MiB.
  static int group_size(int K, int P, int n) {
    const std::size_t budget = std::size_t(1) << 18;
    const std::size_t per = static_cast<std::size_t>(K) * P;
    return std::clamp(static_cast<int>(budget / std::max<std::size_t>(per, 1)), 1, std::max(n, 1));
  }

  // Output columns [lo, hi) whose input column ox * stride - pad + kx lies inside [0, width).
  std::pair<int, int> valid_columns(int kx, int out_w, int in_w) const {
    int lo = 0;
    while (lo < out_w && lo * stride_ - pad_ + kx < 0) ++lo;
    int hi = out_w;
    while (hi > lo && (hi - 1) * stride_ - pad_ + kx >= in_w) --hi;
    return {lo, hi};
  }

  void im2col(const Tensor<T>& x, int n0, int g, const Shape& os, AlignedVector<T>& col) const {
    const int P = os.h * os.w;
    const std::size_t GP = static_cast<std::size_t>(g) * P;
    for (int j = 0; j < g; ++j)
      for (int ci = 0; ci < in_; ++ci) {
        const T* src = x.data() + x.index(n0 + j, ci, 0, 0);
        for (int ky = 0; ky < k_; ++ky)
          for (int kx = 0; kx < k_; ++kx) {
            const std::size_t r = (static_cast<std::size_t>(ci) * k_ + ky) * k_ + kx;
            T* dst = col.data() + r * GP + static_cast<std::size_t>(j) * P;
            const auto [lo, hi] = valid_columns(kx, os.w, x.w());
            for (int oy = 0; oy < os.h; ++oy) {
              T* out = dst + static_cast<std::size_t>(oy) * os.w;
              const int iy = oy * stride_ - pad_ + ky;
              if (iy < 0 || iy >= x.h() || lo >= hi) {
                std::fill_n(out, os.w, T(0));
                continue;
              }
              const T* row = src + static_cast<std::size_t>(iy) * x.w();
              const int offset = kx - pad_;
              std::fill_n(out, lo, T(0));
              if (stride_ == 1) {
                std::copy_n(row + lo + offset, hi - lo, out + lo);
              } else {
                for (int ox = lo; ox < hi; ++ox) out[ox] = row[ox * stride_ + offset];
              }
              std::fill(out + hi, out + os.w, T(0));
            }
          }
      }
  }

  void col2im(const AlignedVector<T>& col, int n0, int g, const Shape& os, Tensor<T>& dx) const {
    const int P = os.h * os.w;
    const std::size_t GP = static_cast<std::size_t>(g) * P;
    for (int j = 0; j < g; ++j)
      for (int ci = 0; ci < in_; ++ci) {
        T* dst = dx.data() + dx.index(n0 + j, ci, 0, 0);
        for (int ky = 0; ky < k_; ++ky)
          for (int kx = 0; kx < k_; ++kx) {
            const std::size_t r = (static_cast<std::size_t>(ci) * k_ + ky) * k_ + kx;
            const T* src = col.data() + r * GP + static_cast<std::size_t>(j) * P;
            const auto [lo, hi] = valid_columns(kx, os.w, dx.w());
            for (int oy = 0; oy < os.h; ++oy) {
              const int iy = oy * stride_ - pad_ + ky;
              if (iy < 0 || iy >= dx.h()) continue;
              T* row = dst + static_cast<std::size_t>(iy) * dx.w();
              const T* in = src + static_cast<std::size_t>(oy) * os.w;
              const int offset = kx - pad_;
              for (int ox = lo; ox < hi; ++ox) row[ox * stride_ + offset] += in[ox];
            }
          }
      }
  }

  int in_ = 0, out_ = 0, k_ = 1, stride_ = 1, pad_ = 0;
  Parameter<T> weight_;
  Parameter<T> bias_;
};

// Batch statistics in train mode, running statistics in eval mode.
template <typename T>
class BatchNorm2d {
 public:
  struct Cache {
    Tensor<T> xhat;
    std::vector<T> inv_std;
    Mode mode = Mode::kTrain;
  };

  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name, int channels, double momentum = 0.1, double eps = 1e-5)
      : momentum_(momentum), eps_(eps),
        gamma_(name + ".gamma", Shape{1, channels, 1, 1}),
        beta_(name + ".beta", Shape{1, channels, 1, 1}),
        running_mean_(name + ".running_mean", Shape{1, channels, 1, 1}, false),
        running_var_(name + ".running_var", Shape{1, channels, 1, 1}, false) {
    gamma_.value.fill(T(1));
    running_var_.value.fill(T(1));
  }

  void init() {
    gamma_.value.fill(T(1));
    beta_.value.zero();
    running_mean_.value.zero();
    running_var_.value.fill(T(1));
  }

  int channels() const { return gamma_.value.c(); }

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Cache* cache) {
    const int C = channels();
    require_input(x.c() == C, gamma_.name + ": channel mismatch " + x.shape().str());
    const int HW = x.h() * x.w();
    const std::size_t M = static_cast<std::size_t>(x.n()) * HW;
    std::vector<T> mean(static_cast<std::size_t>(C)), inv_std(static_cast<std::size_t>(C));
    if (mode == Mode::kTrain) {
      require_input(M > 1, gamma_.name + ": batch statistics need more than one value per channel");
      for (int c = 0; c < C; ++c) {
        double s = 0, ss = 0;
        for (int n = 0; n < x.n(); ++n) {
          const T* p = x.data() + x.index(n, c, 0, 0);
          for (int k = 0; k < HW; ++k) s += p[k];
        }
        const double mu = s / M;
        for (int n = 0; n < x.n(); ++n) {
          const T* p = x.data() + x.index(n, c, 0, 0);
          for (int k = 0; k < HW; ++k) ss += (p[k] - mu) * (p[k] - mu);
        }
        const double var = ss / M;
        mean[c] = static_cast<T>(mu);
        inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + eps_));
        auto& rm = running_mean_.value[static_cast<std::size_t>(c)];
        auto& rv = running_var_.value[static_cast<std::size_t>(c)];
        rm = static_cast<T>((1 - momentum_) * rm + momentum_ * mu);
        rv = static_cast<T>((1 - momentum_) * rv + momentum_ * var * M / (M - 1));
      }
    } else {
      for (int c = 0; c < C; ++c) {
        mean[c] = running_mean_.value[static_cast<std::size_t>(c)];
        inv_std[c] = static_cast<T>(1.0 / std::sqrt(running_var_.value[static_cast<std::size_t>(c)] + eps_));
      }
    }
    Tensor<T> y(x.shape());
    Tensor<T>* xhat = nullptr;
    if (cache) {
      cache->xhat = Tensor<T>(x.shape());
      cache->inv_std = inv_std;
      cache->mode = mode;
      xhat = &cache->xhat;
    }
    for (int n = 0; n < x.n(); ++n)
      for (int c = 0; c < C; ++c) {
        const std::size_t off = x.index(n, c, 0, 0);
        const T g = gamma_.value[static_cast<std::size_t>(c)], b = beta_.value[static_cast<std::size_t>(c)];
        for (int k = 0; k < HW; ++k) {
          const T h = (x[off + k] - mean[c]) * inv_std[c];
          if (xhat) (*xhat)[off + k] = h;
          y[off + k] = g * h + b;
        }
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy, const Cache& cache) {
    const int C = channels();
    const int HW = dy.h() * dy.w();
    const double M = static_cast<double>(dy.n()) * HW;
    Tensor<T> dx(dy.shape());
    for (int c = 0; c < C; ++c) {
      double sum_dy = 0, sum_dy_xhat = 0;
      for (int n = 0; n < dy.n(); ++n) {
        const std::size_t off = dy.index(n, c, 0, 0);
        for (int k = 0; k < HW; ++k) {
          sum_dy += dy[off + k];
          sum_dy_xhat += dy[off + k] * cache.xhat[off + k];
        }
      }
      gamma_.grad[static_cast<std::size_t>(c)] += static_cast<T>(sum_dy_xhat);
      beta_.grad[static_cast<std::size_t>(c)] += static_cast<T>(sum_dy);
      const double g = gamma_.value[static_cast<std::size_t>(c)];
      const double is = cache.inv_std[static_cast<std::size_t>(c)];
      for (int n = 0; n < dy.n(); ++n) {
        const std::size_t off = dy.index(n, c, 0, 0);
        for (int k = 0; k < HW; ++k) {
          if (cache.mode == Mode::kTrain) {
            dx[off + k] = static_cast<T>(g * is / M * (M * dy[off + k] - sum_dy - cache.xhat[off + k] * sum_dy_xhat));
          } else {
            dx[off + k] = static_cast<T>(g * is * dy[off + k]);
          }
        }
      }
    }
    return dx;
  }

  void collect(ParamList<T>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
  }

  std::size_t parameter_count() const { return 2 * static_cast<std::size_t>(channels()); }

 private:
  double momentum_ = 0.1;
  double eps_ = 1e-5;
  Parameter<T> gamma_, beta_, running_mean_, running_var_;
};

template <typename T>
struct Relu {
  struct Cache {
    Tensor<T> output;
  };
  static Tensor<T> forward(Tensor<T> x, Cache* cache) {
    for (auto& v : x.values()) v = v > T(0) ? v : T(0);
    if (cache) cache->output = x;
    return x;
  }
  static Tensor<T> backward(Tensor<T> dy, const Cache& cache) {
    for (std::size_t k = 0; k < dy.size(); ++k)
      if (!(cache.output[k] > T(0))) dy[k] = T(0);
    return dy;
  }
};

template <typename T>
struct Sigmoid {
  struct Cache {
    Tensor<T> output;
  };
  static Tensor<T> forward(Tensor<T> x, Cache* cache) {
    for (auto& v : x.values()) v = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
    if (cache) cache->output = x;
    return x;
  }
  static Tensor<T> backward(Tensor<T> dy, const Cache& cache) {
    for (std::size_t k = 0; k < dy.size(); ++k) dy[k] *= cache.output[k] * (T(1) - cache.output[k]);
    return dy;
  }
};

// 2x2 max pooling with stride 2.
template <typename T>
struct MaxPool2 {
  struct Cache {
    Shape input;
    std::vector<std::uint32_t> argmax;
  };
  static Tensor<T> forward(const Tensor<T>& x, Cache* cache) {
    require_input(x.h() % 2 == 0 && x.w() % 2 == 0, "max pool needs even spatial size, got " + x.shape().str());
    Tensor<T> y(x.n(), x.c(), x.h() / 2, x.w() / 2);
    if (cache) {
      cache->input = x.shape();
      cache->argmax.resize(y.size());
    }
    std::size_t o = 0;
    for (int n = 0; n < x.n(); ++n)
      for (int c = 0; c < x.c(); ++c)
        for (int oy = 0; oy < y.h(); ++oy)
          for (int ox = 0; ox < y.w(); ++ox, ++o) {
            std::size_t best = x.index(n, c, 2 * oy, 2 * ox);
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                const std::size_t k = x.index(n, c, 2 * oy + dy, 2 * ox + dx);
                if (x[k] > x[best]) best = k;
              }
            y[o] = x[best];
            if (cache) cache->argmax[o] = static_cast<std::uint32_t>(best);
          }
    return y;
  }
  static Tensor<T> backward(const Tensor<T>& dy, const Cache& cache) {
    Tensor<T> dx(cache.input);
    for (std::size_t o = 0; o < dy.size(); ++o) dx[cache.argmax[o]] += dy[o];
    return dx;
  }
};

// Nearest-neighbour x2 upsampling.
template <typename T>
struct Upsample2 {
  static Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y(x.n(), x.c(), x.h() * 2, x.w() * 2);
    for (int n = 0; n < x.n(); ++n)
      for (int c = 0; c < x.c(); ++c)
        for (int yy = 0; yy < y.h(); ++yy) {
          const T* src = x.data() + x.index(n, c, yy / 2, 0);
          T* dst = y.data() + y.index(n, c, yy, 0);
          for (int xx = 0; xx < y.w(); ++xx) dst[xx] = src[xx / 2];
        }
    return y;
  }
  static Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.n(), dy.c(), dy.h() / 2, dy.w() / 2);
    for (int n = 0; n < dy.n(); ++n)
      for (int c = 0; c < dy.c(); ++c)
        for (int yy = 0; yy < dy.h(); ++yy) {
          const T* src = dy.data() + dy.index(n, c, yy, 0);
          T* dst = dx.data() + dx.index(n, c, yy / 2, 0);
          for (int xx = 0; xx < dy.w(); ++xx) dst[xx / 2] += src[xx];
        }
    return dx;
  }
};

// Bilinear resize with pixel-centre alignment (align_corners = false).
template <typename T>
class BilinearResize {
 public:
  BilinearResize() = default;
  BilinearResize(int height, int width) : height_(height), width_(width) {}

  Tensor<T> forward(const Tensor<T>& x) const {
    Tensor<T> y(x.n(), x.c(), height_, width_);
    const auto ys = taps(x.h(), height_), xs = taps(x.w(), width_);
    for (int n = 0; n < x.n(); ++n)
      for (int c = 0; c < x.c(); ++c)
        for (int oy = 0; oy < height_; ++oy)
          for (int ox = 0; ox < width_; ++ox) {
            const Tap& ty = ys[static_cast<std::size_t>(oy)];
            const Tap& tx = xs[static_cast<std::size_t>(ox)];
            y.at(n, c, oy, ox) = static_cast<T>(
                (1 - ty.frac) * ((1 - tx.frac) * x.at(n, c, ty.i0, tx.i0) + tx.frac * x.at(n, c, ty.i0, tx.i1)) +
                ty.frac * ((1 - tx.frac) * x.at(n, c, ty.i1, tx.i0) + tx.frac * x.at(n, c, ty.i1, tx.i1)));
          }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy, const Shape& input) const {
    Tensor<T> dx(input);
    const auto ys = taps(input.h, height_), xs = taps(input.w, width_);
    for (int n = 0; n < dy.n(); ++n)
      for (int c = 0; c < dy.c(); ++c)
        for (int oy = 0; oy < height_; ++oy)
          for (int ox = 0; ox < width_; ++ox) {
            const Tap& ty = ys[static_cast<std::size_t>(oy)];
            const Tap& tx = xs[static_cast<std::size_t>(ox)];
            const T g = dy.at(n, c, oy, ox);
            dx.at(n, c, ty.i0, tx.i0) += static_cast<T>((1 - ty.frac) * (1 - tx.frac) * g);
            dx.at(n, c, ty.i0, tx.i1) += static_cast<T>((1 - ty.frac) * tx.frac * g);
            dx.at(n, c, ty.i1, tx.i0) += static_cast<T>(ty.frac * (1 - tx.frac) * g);
            dx.at(n, c, ty.i1, tx.i1) += static_cast<T>(ty.frac * tx.frac * g);
          }
    return dx;
  }

 private:
  struct Tap {
    int i0, i1;
    double frac;
  };
  static std::vector<Tap> taps(int in, int out) {
    std::vector<Tap> t(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      const double src = std::max(0.0, (o + 0.5) * scale - 0.5);
      const int i0 = std::min(static_cast<int>(src), in - 1);
      t[static_cast<std::size_t>(o)] = Tap{i0, std::min(i0 + 1, in - 1), src - i0};
    }
    return t;
  }

  int height_ = 0, width_ = 0;
};

// Channel-wise spatial mean: N x C x H x W -> N x C x 1 x 1.
template <typename T>
struct GlobalAvgPool {
  static Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y(x.n(), x.c(), 1, 1);
    const int HW = x.h() * x.w();
    for (int n = 0; n < x.n(); ++n)
      for (int c = 0; c < x.c(); ++c) {
        const T* p = x.data() + x.index(n, c, 0, 0);
        double s = 0;
        for (int k = 0; k < HW; ++k) s += p[k];
        y.at(n, c, 0, 0) = static_cast<T>(s / HW);
      }
    return y;
  }
  static Tensor<T> backward(const Tensor<T>& dy, const Shape& input) {
    Tensor<T> dx(input);
    const int HW = input.h * input.w;
    for (int n = 0; n < input.n; ++n)
      for (int c = 0; c < input.c; ++c) {
        const T g = dy.at(n, c, 0, 0) / static_cast<T>(HW);
        T* p = dx.data() + dx.index(n, c, 0, 0);
        for (int k = 0; k < HW; ++k) p[k] = g;
      }
    return dx;
  }
};

// Affine map on flattened per-sample features; output is N x out x 1 x 1.
template <typename T>
class Linear {
 public:
  struct Cache {
    Tensor<T> input;
  };

  Linear() = default;
  Linear(const std::string& name, int in, int out)
      : in_(in), out_(out), weight_(name + ".weight", Shape{1, 1, out, in}), bias_(name + ".bias", Shape{1, out, 1, 1}) {}

  void init(Rng& rng, double stddev) {
    fill_normal(weight_.value, rng, stddev);
    bias_.value.zero();
  }

  int in_features() const { return in_; }
  int out_features() const { return out_; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    require_input(static_cast<int>(x.shape().per_sample()) == in_,
                  weight_.name + ": expected " + std::to_string(in_) + " features, got " + x.shape().str());
    Tensor<T> y(x.n(), out_, 1, 1);
    MatrixMap<T>(y.data(), x.n(), out_).noalias() =
        ConstMatrixMap<T>(x.data(), x.n(), in_) * ConstMatrixMap<T>(weight_.value.data(), out_, in_).transpose();
    for (int n = 0; n < x.n(); ++n)
      for (int o = 0; o < out_; ++o) y.at(n, o, 0, 0) += bias_.value[static_cast<std::size_t>(o)];
    if (cache) cache->input = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy, const Cache& cache) {
    const int N = dy.n();
    ConstMatrixMap<T> dY(dy.data(), N, out_);
    MatrixMap<T>(weight_.grad.data(), out_, in_).noalias() += dY.transpose() * ConstMatrixMap<T>(cache.input.data(), N, in_);
    for (int o = 0; o < out_; ++o) bias_.grad[static_cast<std::size_t>(o)] += dY.col(o).sum();
    Tensor<T> dx(cache.input.shape());
    MatrixMap<T>(dx.data(), N, in_).noalias() = dY * ConstMatrixMap<T>(weight_.value.data(), out_, in_);
    return dx;
  }

  void collect(ParamList<T>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  std::size_t parameter_count() const { return weight_.value.size() + bias_.value.size(); }

 private:
  int in_ = 0, out_ = 0;
  Parameter<T> weight_, bias_;
};

}  // namespace san::nn
