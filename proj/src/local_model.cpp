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

#include "vflsim/local_model.hpp"

#include "vflsim/error.hpp"
#include "vflsim/loss.hpp"
#include "vflsim/rng.hpp"

namespace vfl {

LocalModel LocalModel::create(const FeatureSchema& schema, const ModelDims& dims,
                              const OptimizerConfig& optimizer, std::uint64_t init_seed) {
  if (schema.party != Party::kHost) throw SchemaError("the local DNN trains on host data");
  LocalModel m;
  m.schema_ = schema;
  Rng emb_rng(derive_seed(init_seed, "local.embedding"));
  Rng bottom_rng(derive_seed(init_seed, "local.bottom"));
  Rng head_rng(derive_seed(init_seed, "local.head"));
  m.embedding_ = EmbeddingSet::random(schema.slot_names(), schema.vocab_sizes(),
                                      dims.embedding_dim, emb_rng);
  m.bottom_ = Mlp::random(m.embedding_.output_width(), dims.host_bottom, Activation::kRelu,
                          Activation::kRelu, bottom_rng);
  m.head_ = Mlp::random(m.bottom_.out_dim(), {1}, Activation::kLinear, Activation::kLinear,
                        head_rng);
  m.embedding_opt_ = OptimizerState(optimizer);
  m.bottom_opt_ = OptimizerState(optimizer);
  m.head_opt_ = OptimizerState(optimizer);
  return m;
}

LocalModel::Forward LocalModel::forward(const IndexMatrix& x) const {
  Forward f;
  f.x = x;
  MlpOutput bottom = mlp_forward(bottom_, embed_lookup(embedding_, x));
  f.bottom_cache = std::move(bottom.cache);
  MlpOutput head = mlp_forward(head_, bottom.output);
  f.head_cache = std::move(head.cache);
  f.logits = std::move(head.output);
  f.probs = sigmoid(f.logits);
  return f;
}

void LocalModel::update(const Forward& fwd, const Tensor& grad_logits) {
  MlpGradients head = mlp_backward(head_, fwd.head_cache, grad_logits);
  MlpGradients bottom = mlp_backward(bottom_, fwd.bottom_cache, head.grad_input);
  GradientSet emb = embed_backward(embedding_, fwd.x, bottom.grad_input);
  embedding_opt_.step(embedding_.parameters(), emb);
  bottom_opt_.step(bottom_.parameters(), bottom.params);
  head_opt_.step(head_.parameters(), head.params);
}

}  // namespace vfl
