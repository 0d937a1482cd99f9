// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <new>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "san/core/errors.hpp"

namespace san {

struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t per_sample() const { return static_cast<std::size_t>(c) * h * w; }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    std::ostringstream os;
    os << "[" << n << "x" << c << "x" << h << "x" << w << "]";
    return os.str();
  }
};

template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlignment); }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

// Cache-line aligned buffer, so vectorized kernels see the same layout on every run.
template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

// Dense NCHW tensor with value semantics.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(shape.numel(), fill) {}
  Tensor(int n, int c, int h, int w, T fill = T(0)) : Tensor(Shape{n, c, h, w}, fill) {}

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  AlignedVector<T>& storage() { return data_; }
  const AlignedVector<T>& storage() const { return data_; }

  std::span<T> sample(int i) {
    return std::span<T>(data_).subspan(static_cast<std::size_t>(i) * shape_.per_sample(),
                                       shape_.per_sample());
  }
  std::span<const T> sample(int i) const {
    return std::span<const T>(data_).subspan(static_cast<std::size_t>(i) * shape_.per_sample(),
                                             shape_.per_sample());
  }

  std::size_t index(int i, int ch, int y, int x) const {
    return ((static_cast<std::size_t>(i) * shape_.c + ch) * shape_.h + y) * shape_.w + x;
  }
  T& at(int i, int ch, int y, int x) { return data_[index(i, ch, y, x)]; }
  const T& at(int i, int ch, int y, int x) const { return data_[index(i, ch, y, x)]; }

  T& operator[](std::size_t k) { return data_[k]; }
  const T& operator[](std::size_t k) const { return data_[k]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(T(0)); }

  Tensor& operator+=(const Tensor& other) {
    require_input(shape_ == other.shape_,
                  "tensor add: shape " + shape_.str() + " vs " + other.shape_.str());
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
    return *this;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t k = 0; k < data_.size(); ++k) out[k] = static_cast<U>(data_[k]);
    return out;
  }

  // Copies the listed samples into a new batch tensor.
  Tensor gather(std::span<const int> rows) const {
    Shape s = shape_;
    s.n = static_cast<int>(rows.size());
    Tensor out(s);
    const std::size_t m = shape_.per_sample();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(rows[r] * m), m,
                  out.data_.begin() + static_cast<std::ptrdiff_t>(r * m));
    }
    return out;
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  AlignedVector<T> data_;
};

}  // namespace san
