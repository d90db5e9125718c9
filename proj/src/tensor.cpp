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

#include "vflsim/tensor.hpp"

#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>

#include "vflsim/error.hpp"

namespace vfl {
namespace {

std::size_t checked_product(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), values_(checked_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(values.begin(), values.end()) {
  if (checked_product(shape_) != values_.size()) {
    throw ShapeError("value count " + std::to_string(values_.size()) +
                     " does not match shape " + shape_string());
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

std::size_t Tensor::rows() const {
  require_rank2(*this, "rows()");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  require_rank2(*this, "cols()");
  return shape_[1];
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(*this, other, "tensor +=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Tensor& Tensor::operator*=(double scale) {
  for (double& v : values_) v *= scale;
  return *this;
}

bool Tensor::operator==(const Tensor& other) const {
  return shape_ == other.shape_ &&
         (values_.empty() ||
          std::memcmp(values_.data(), other.values_.data(),
                      values_.size() * sizeof(double)) == 0);
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  return os.str();
}

Tensor operator+(Tensor a, const Tensor& b) {
  a += b;
  return a;
}

Tensor operator*(Tensor a, double scale) {
  a *= scale;
  return a;
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape " + a.shape_string() +
                     " vs " + b.shape_string());
  }
}

void require_rank2(const Tensor& t, std::string_view what) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(what) + ": expected a matrix, got shape " +
                     t.shape_string());
  }
}

void require_finite(const Tensor& t, std::string_view what) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(what) + " produced a non-finite value");
    }
  }
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank2(a, "concat_cols");
  require_rank2(b, "concat_cols");
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_cols: row counts differ (" + a.shape_string() +
                     " vs " + b.shape_string() + ")");
  }
  const std::size_t rows = a.rows(), ca = a.cols(), cb = b.cols();
  Tensor out = Tensor::matrix(rows, ca + cb);
  for (std::size_t r = 0; r < rows; ++r) {
    std::memcpy(out.data() + r * (ca + cb), a.data() + r * ca, ca * sizeof(double));
    std::memcpy(out.data() + r * (ca + cb) + ca, b.data() + r * cb, cb * sizeof(double));
  }
  return out;
}

Tensor slice_cols(const Tensor& t, std::size_t begin, std::size_t count) {
  require_rank2(t, "slice_cols");
  if (count == 0 || begin + count > t.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " +
                     t.shape_string());
  }
  Tensor out = Tensor::matrix(t.rows(), count);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    std::memcpy(out.data() + r * count, t.data() + r * t.cols() + begin,
                count * sizeof(double));
  }
  return out;
}

Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows) {
  require_rank2(t, "gather_rows");
  Tensor out = Tensor::matrix(rows.size(), t.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= t.rows()) throw ShapeError("gather_rows: row out of range");
    std::memcpy(out.data() + i * t.cols(), t.data() + rows[i] * t.cols(),
                t.cols() * sizeof(double));
  }
  return out;
}

}  // namespace vfl
