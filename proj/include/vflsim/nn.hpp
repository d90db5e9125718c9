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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vflsim/tensor.hpp"

namespace vfl {

class Rng;

// Row-major matrix of hashed feature indices: one row per sample, one column
// per feature slot.
struct IndexMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint32_t> indices;

  IndexMatrix() = default;
  IndexMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), indices(r * c) {}

  std::uint32_t& at(std::size_t r, std::size_t c) { return indices[r * cols + c]; }
  std::uint32_t at(std::size_t r, std::size_t c) const {
    return indices[r * cols + c];
  }
  bool operator==(const IndexMatrix&) const = default;
};

// Per-parameter gradients laid out in the owner's parameter order.
struct GradientSet {
  std::vector<Tensor> tensors;

  GradientSet& operator+=(const GradientSet& other);
  GradientSet& operator*=(double scale);
};

struct EmbeddingTable {
  std::string slot;
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
  Tensor rows;  // vocab_size x dim
};

// One table per feature slot, all with the same dim.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  explicit EmbeddingSet(std::vector<EmbeddingTable> tables);

  // Tables initialised uniform(-scale, scale).
  static EmbeddingSet random(const std::vector<std::string>& slots,
                             const std::vector<std::size_t>& vocab_sizes,
                             std::size_t dim, Rng& rng, double scale = 0.01);

  std::size_t num_slots() const { return tables_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t output_width() const { return tables_.size() * dim_; }
  const std::vector<EmbeddingTable>& tables() const { return tables_; }
  std::vector<EmbeddingTable>& tables() { return tables_; }

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

 private:
  std::vector<EmbeddingTable> tables_;
  std::size_t dim_ = 0;
};

// batch x (num_slots * dim): per-slot rows concatenated in slot order.
Tensor embed_lookup(const EmbeddingSet& tables, const IndexMatrix& x);

// Dense gradient for every table given d(loss)/d(lookup output).
GradientSet embed_backward(const EmbeddingSet& tables, const IndexMatrix& x,
                           const Tensor& grad_output);

enum class Activation { kRelu, kLinear };

struct DenseLayer {
  Tensor weight;  // out_dim x in_dim
  Tensor bias;    // 1 x out_dim
  Activation activation = Activation::kRelu;

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }
};

// Activations retained by mlp_forward for an exact backward pass.
struct MlpCache {
  std::vector<Tensor> inputs;          // input of each layer
  std::vector<Tensor> preactivations;  // X W^T + b of each layer
  std::vector<std::size_t> dims;       // in0, out0, out1, ...
  std::uint64_t revision = 0;
  bool valid = false;
};

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  // Glorot-uniform weights, zero biases. Every layer uses `hidden` except the
  // last, which uses `output`.
  static Mlp random(std::size_t in_dim, const std::vector<std::size_t>& widths,
                    Activation hidden, Activation output, Rng& rng);

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::size_t num_layers() const { return layers_.size(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers();

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  // Incremented whenever parameters may have changed; caches taken before a
  // bump are rejected by mlp_backward.
  std::uint64_t revision() const { return revision_; }
  void touch() { ++revision_; }

 private:
  std::vector<DenseLayer> layers_;
  std::uint64_t revision_ = 0;
};

struct MlpOutput {
  Tensor output;
  MlpCache cache;
};

struct MlpGradients {
  GradientSet params;
  Tensor grad_input;
};

MlpOutput mlp_forward(const Mlp& mlp, const Tensor& input);
MlpGradients mlp_backward(const Mlp& mlp, const MlpCache& cache,
                          const Tensor& grad_output);

// Snapshot of parameter bytes, for frozen-parameter checks and digests.
std::vector<double> flatten(std::span<const Tensor* const> params);

}  // namespace vfl
