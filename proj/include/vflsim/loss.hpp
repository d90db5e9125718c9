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

#include "vflsim/tensor.hpp"

namespace vfl {

// Predictions are clamped to [kProbClamp, 1 - kProbClamp] before any log.
inline constexpr double kProbClamp = 1e-7;

// Elementwise logistic function, always strictly inside (0, 1).
Tensor sigmoid(const Tensor& z);
double sigmoid(double z);

struct LossResult {
  double loss = 0.0;
  Tensor grad;
};

// Mean binary cross-entropy. `grad` is the fused sigmoid+BCE gradient with
// respect to the logits, (p - y) / batch.
LossResult bce_loss(const Tensor& predictions, const Tensor& labels);

// Mean over rows of the squared row distance. `target` is a constant: `grad`
// is with respect to `a` only, 2 (a - target) / batch.
LossResult mse_loss(const Tensor& a, const Tensor& target);

}  // namespace vfl
