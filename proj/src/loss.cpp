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

#include "vflsim/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vflsim/error.hpp"

namespace vfl {

double sigmoid(double z) {
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  static const double hi = std::nextafter(1.0, 0.0);
  double p;
  if (z >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  return std::clamp(p, lo, hi);
}

Tensor sigmoid(const Tensor& z) {
  Tensor out = z;
  for (double& v : out.values()) v = sigmoid(v);
  return out;
}

LossResult bce_loss(const Tensor& predictions, const Tensor& labels) {
  if (predictions.size() != labels.size()) {
    throw ShapeError("bce_loss: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = predictions.size();
  if (n == 0) throw ShapeError("bce_loss: empty batch");
  LossResult r{0.0, Tensor(predictions.shape())};
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(predictions[i], kProbClamp, 1.0 - kProbClamp);
    const double y = labels[i];
    sum += -y * std::log(p) - (1.0 - y) * std::log(1.0 - p);
    r.grad[i] = (predictions[i] - y) / static_cast<double>(n);
  }
  r.loss = sum / static_cast<double>(n);
  if (!std::isfinite(r.loss)) throw NumericError("bce_loss produced a non-finite value");
  require_finite(r.grad, "bce_loss gradient");
  return r;
}

LossResult mse_loss(const Tensor& a, const Tensor& target) {
  require_same_shape(a, target, "mse_loss");
  require_rank2(a, "mse_loss");
  const std::size_t batch = a.rows();
  LossResult r{0.0, Tensor(a.shape())};
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - target[i];
    sum += d * d;
    r.grad[i] = 2.0 * d / static_cast<double>(batch);
  }
  r.loss = sum / static_cast<double>(batch);
  if (!std::isfinite(r.loss)) throw NumericError("mse_loss produced a non-finite value");
  return r;
}

}  // namespace vfl
