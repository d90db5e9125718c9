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

#include "vflsim/optimizer.hpp"

#include <cmath>

#include "vflsim/error.hpp"

namespace vfl {

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

void OptimizerState::restore(std::int64_t steps, std::vector<Tensor> m,
                             std::vector<Tensor> v) {
  if (steps < 0) throw CheckpointError("optimizer step counter is negative");
  if (m.size() != v.size()) throw CheckpointError("optimizer moment counts differ");
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

void OptimizerState::step(std::span<Tensor* const> params, const GradientSet& grads) {
  if (params.size() != grads.tensors.size()) {
    throw ShapeError("optimizer: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.tensors.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], grads.tensors[i], "optimizer gradient");
  }

  if (config_.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      double* p = params[i]->data();
      const double* g = grads.tensors[i].data();
      for (std::size_t k = 0; k < params[i]->size(); ++k) p[k] -= config_.learning_rate * g[k];
    }
    ++steps_;
    return;
  }

  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
    }
  }
  if (m_.size() != params.size()) {
    throw ShapeError("optimizer state tracks " + std::to_string(m_.size()) +
                     " parameters, step got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], m_[i], "optimizer moment");
  }

  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i]->data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    const double* g = grads.tensors[i].data();
    for (std::size_t k = 0; k < params[i]->size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace vfl
