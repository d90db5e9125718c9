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

#include <functional>
#include <span>

#include "vflsim/nn.hpp"

namespace vfl {

// Compares analytic gradients with central finite differences.
//
// `loss` must recompute the scalar loss from the current contents of
// `params`; each entry is perturbed in place by +/- epsilon and restored.
// Returns max over all entries of
//   |analytic - numeric| / max(1, |analytic|, |numeric|).
double grad_check(std::span<Tensor* const> params, const GradientSet& analytic,
                  const std::function<double()>& loss, double epsilon = 1e-5);

}  // namespace vfl
