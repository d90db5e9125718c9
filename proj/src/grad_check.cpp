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

#include "vflsim/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "vflsim/error.hpp"

namespace vfl {

double grad_check(std::span<Tensor* const> params, const GradientSet& analytic,
                  const std::function<double()>& loss, double epsilon) {
  if (params.size() != analytic.tensors.size()) {
    throw ShapeError("grad_check: parameter and gradient counts differ");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    require_same_shape(p, analytic.tensors[i], "grad_check");
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double saved = p[k];
      p[k] = saved + epsilon;
      const double up = loss();
      p[k] = saved - epsilon;
      const double down = loss();
      p[k] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic.tensors[i][k];
      const double err =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace vfl
