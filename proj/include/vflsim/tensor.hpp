// Copyright 2026 The vflsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vfl {

// Allocator returning 64-byte aligned blocks. Vectorized kernels choose their
// reduction order from the buffer alignment, so a fixed alignment keeps
// results bitwise reproducible from one allocation to the next.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlignment));
  }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

// Dense row-major array of doubles. Every dimension is positive and the value
// count always equals the product of the shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  // Rank-2 accessors.
  std::size_t rows() const;
  std::size_t cols() const;
  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * shape_[1] + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * shape_[1] + c];
  }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  void fill(double v);
  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double scale);

  // Bitwise equality of shape and values.
  bool operator==(const Tensor& other) const;

  std::string shape_string() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double, AlignedAllocator<double>> values_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double scale);

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what);
void require_rank2(const Tensor& t, std::string_view what);

// Throws NumericError naming `what` if any value is NaN or infinite.
void require_finite(const Tensor& t, std::string_view what);

// [a | b] along columns; a and b must have equal row counts.
Tensor concat_cols(const Tensor& a, const Tensor& b);

// Columns [begin, begin + count) of a rank-2 tensor.
Tensor slice_cols(const Tensor& t, std::size_t begin, std::size_t count);

// Selected rows of a rank-2 tensor, in the given order.
Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows);

}  // namespace vfl
