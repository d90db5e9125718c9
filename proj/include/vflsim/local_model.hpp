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

#include <cstdint>

#include "vflsim/data.hpp"
#include "vflsim/model.hpp"
#include "vflsim/nn.hpp"
#include "vflsim/optimizer.hpp"

namespace vfl {

// Host-only DNN baseline: Emb_H -> bottom MLP -> linear logit.
class LocalModel {
 public:
  struct Forward {
    IndexMatrix x;
    MlpCache bottom_cache;
    MlpCache head_cache;
    Tensor logits;
    Tensor probs;
  };

  LocalModel() = default;
  static LocalModel create(const FeatureSchema& schema, const ModelDims& dims,
                           const OptimizerConfig& optimizer, std::uint64_t init_seed);

  Forward forward(const IndexMatrix& x) const;
  // Backward from d(loss)/d(logits) followed by one optimizer step.
  void update(const Forward& fwd, const Tensor& grad_logits);

  const FeatureSchema& schema() const { return schema_; }
  const EmbeddingSet& embedding() const { return embedding_; }
  EmbeddingSet& embedding() { return embedding_; }
  const Mlp& bottom() const { return bottom_; }
  Mlp& bottom() { return bottom_; }
  const Mlp& head() const { return head_; }
  Mlp& head() { return head_; }
  OptimizerState& embedding_optimizer() { return embedding_opt_; }
  OptimizerState& bottom_optimizer() { return bottom_opt_; }
  OptimizerState& head_optimizer() { return head_opt_; }
  const OptimizerState& embedding_optimizer() const { return embedding_opt_; }
  const OptimizerState& bottom_optimizer() const { return bottom_opt_; }
  const OptimizerState& head_optimizer() const { return head_opt_; }

 private:
  FeatureSchema schema_;
  EmbeddingSet embedding_;
  Mlp bottom_;
  Mlp head_;
  OptimizerState embedding_opt_;
  OptimizerState bottom_opt_;
  OptimizerState head_opt_;
};

}  // namespace vfl
