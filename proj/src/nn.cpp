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

#include "vflsim/nn.hpp"

#include <cmath>
#include <cstring>

#include "eigen_maps.hpp"
#include "vflsim/error.hpp"
#include "vflsim/rng.hpp"

namespace vfl {

using detail::as_matrix;

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (tensors.size() != other.tensors.size()) {
    throw ShapeError("GradientSet +=: owners differ (" + std::to_string(tensors.size()) +
                     " vs " + std::to_string(other.tensors.size()) + " tensors)");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) tensors[i] += other.tensors[i];
  return *this;
}

GradientSet& GradientSet::operator*=(double scale) {
  for (Tensor& t : tensors) t *= scale;
  return *this;
}

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingSet::EmbeddingSet(std::vector<EmbeddingTable> tables)
    : tables_(std::move(tables)) {
  if (tables_.empty()) throw SchemaError("embedding set needs at least one slot");
  dim_ = tables_.front().dim;
  for (const EmbeddingTable& t : tables_) {
    if (t.dim != dim_) {
      throw SchemaError("embedding slot '" + t.slot + "' has dim " +
                        std::to_string(t.dim) + ", expected " + std::to_string(dim_));
    }
    if (t.rows.shape() != std::vector<std::size_t>{t.vocab_size, t.dim}) {
      throw ShapeError("embedding slot '" + t.slot + "' rows have shape " +
                       t.rows.shape_string());
    }
  }
}

EmbeddingSet EmbeddingSet::random(const std::vector<std::string>& slots,
                                  const std::vector<std::size_t>& vocab_sizes,
                                  std::size_t dim, Rng& rng, double scale) {
  if (slots.size() != vocab_sizes.size()) {
    throw SchemaError("slot names and vocab sizes differ in length");
  }
  std::vector<EmbeddingTable> tables;
  tables.reserve(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    EmbeddingTable t{slots[s], vocab_sizes[s], dim, Tensor::matrix(vocab_sizes[s], dim)};
    for (double& v : t.rows.values()) v = rng.uniform(-scale, scale);
    tables.push_back(std::move(t));
  }
  return EmbeddingSet(std::move(tables));
}

std::vector<Tensor*> EmbeddingSet::parameters() {
  std::vector<Tensor*> out;
  for (EmbeddingTable& t : tables_) out.push_back(&t.rows);
  return out;
}

std::vector<const Tensor*> EmbeddingSet::parameters() const {
  std::vector<const Tensor*> out;
  for (const EmbeddingTable& t : tables_) out.push_back(&t.rows);
  return out;
}

namespace {

void check_indices(const EmbeddingSet& tables, const IndexMatrix& x) {
  if (x.cols != tables.num_slots()) {
    throw SchemaError("expected " + std::to_string(tables.num_slots()) +
                      " slot indices per sample, got " + std::to_string(x.cols));
  }
  if (x.rows == 0) throw ShapeError("embedding lookup on an empty batch");
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t s = 0; s < x.cols; ++s) {
      const auto& t = tables.tables()[s];
      if (x.at(r, s) >= t.vocab_size) {
        throw VocabError("index " + std::to_string(x.at(r, s)) + " out of range for slot '" +
                         t.slot + "' (vocab " + std::to_string(t.vocab_size) + ")");
      }
    }
  }
}

}  // namespace

Tensor embed_lookup(const EmbeddingSet& tables, const IndexMatrix& x) {
  check_indices(tables, x);
  const std::size_t dim = tables.dim();
  const std::size_t width = tables.output_width();
  Tensor out = Tensor::matrix(x.rows, width);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t s = 0; s < x.cols; ++s) {
      const Tensor& rows = tables.tables()[s].rows;
      std::memcpy(out.data() + r * width + s * dim, rows.data() + x.at(r, s) * dim,
                  dim * sizeof(double));
    }
  }
  return out;
}

GradientSet embed_backward(const EmbeddingSet& tables, const IndexMatrix& x,
                           const Tensor& grad_output) {
  check_indices(tables, x);
  const std::size_t dim = tables.dim();
  const std::size_t width = tables.output_width();
  if (grad_output.shape() != std::vector<std::size_t>{x.rows, width}) {
    throw ShapeError("embedding gradient has shape " + grad_output.shape_string());
  }
  GradientSet grads;
  for (const EmbeddingTable& t : tables.tables()) {
    grads.tensors.push_back(Tensor::matrix(t.vocab_size, dim));
  }
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t s = 0; s < x.cols; ++s) {
      double* dst = grads.tensors[s].data() + x.at(r, s) * dim;
      const double* src = grad_output.data() + r * width + s * dim;
      for (std::size_t k = 0; k < dim; ++k) dst[k] += src[k];
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// MLP

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("an MLP needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const DenseLayer& l = layers_[i];
    require_rank2(l.weight, "dense weight");
    if (l.bias.shape() != std::vector<std::size_t>{1, l.out_dim()}) {
      throw ShapeError("layer " + std::to_string(i) + ": bias shape " +
                       l.bias.shape_string() + " does not match weight " +
                       l.weight.shape_string());
    }
    if (i > 0 && layers_[i - 1].out_dim() != l.in_dim()) {
      throw ShapeError("layer " + std::to_string(i) + " expects " +
                       std::to_string(l.in_dim()) + " inputs but previous layer emits " +
                       std::to_string(layers_[i - 1].out_dim()));
    }
  }
}

Mlp Mlp::random(std::size_t in_dim, const std::vector<std::size_t>& widths,
                Activation hidden, Activation output, Rng& rng) {
  if (widths.empty()) throw ShapeError("an MLP needs at least one layer");
  std::vector<DenseLayer> layers;
  std::size_t fan_in = in_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::size_t fan_out = widths[i];
    DenseLayer l{Tensor::matrix(fan_out, fan_in), Tensor::matrix(1, fan_out),
                 i + 1 == widths.size() ? output : hidden};
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& w : l.weight.values()) w = rng.uniform(-limit, limit);
    layers.push_back(std::move(l));
    fan_in = fan_out;
  }
  return Mlp(std::move(layers));
}

std::size_t Mlp::in_dim() const { return layers_.front().in_dim(); }
std::size_t Mlp::out_dim() const { return layers_.back().out_dim(); }

std::vector<DenseLayer>& Mlp::mutable_layers() {
  touch();
  return layers_;
}

std::vector<Tensor*> Mlp::parameters() {
  touch();
  std::vector<Tensor*> out;
  for (DenseLayer& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> Mlp::parameters() const {
  std::vector<const Tensor*> out;
  for (const DenseLayer& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

MlpOutput mlp_forward(const Mlp& mlp, const Tensor& input) {
  require_rank2(input, "mlp_forward input");
  if (input.cols() != mlp.in_dim()) {
    throw ShapeError("mlp_forward: input width " + std::to_string(input.cols()) +
                     " but first layer expects " + std::to_string(mlp.in_dim()));
  }
  MlpOutput result;
  MlpCache& cache = result.cache;
  cache.dims.push_back(mlp.in_dim());
  Tensor x = input;
  for (const DenseLayer& layer : mlp.layers()) {
    Tensor z = Tensor::matrix(x.rows(), layer.out_dim());
    auto zm = as_matrix(z);
    zm.noalias() = as_matrix(x) * as_matrix(layer.weight).transpose();
    zm.rowwise() += as_matrix(layer.bias).row(0);
    Tensor a = z;
    if (layer.activation == Activation::kRelu) {
      for (double& v : a.values()) v = v > 0.0 ? v : 0.0;
    }
    cache.inputs.push_back(std::move(x));
    cache.preactivations.push_back(std::move(z));
    cache.dims.push_back(layer.out_dim());
    x = std::move(a);
  }
  require_finite(x, "mlp_forward");
  cache.revision = mlp.revision();
  cache.valid = true;
  result.output = std::move(x);
  return result;
}

MlpGradients mlp_backward(const Mlp& mlp, const MlpCache& cache,
                          const Tensor& grad_output) {
  if (!cache.valid || cache.inputs.size() != mlp.num_layers()) {
    throw CacheError("mlp_backward: cache does not come from this network");
  }
  if (cache.revision != mlp.revision()) {
    throw CacheError("mlp_backward: cache is stale (parameters changed since forward)");
  }
  for (std::size_t i = 0; i < mlp.num_layers(); ++i) {
    if (cache.dims[i] != mlp.layers()[i].in_dim() ||
        cache.dims[i + 1] != mlp.layers()[i].out_dim()) {
      throw CacheError("mlp_backward: cache dims do not match layer " + std::to_string(i));
    }
  }
  require_same_shape(grad_output, cache.preactivations.back(), "mlp_backward grad_output");

  MlpGradients result;
  result.params.tensors.resize(2 * mlp.num_layers());
  Tensor grad = grad_output;
  for (std::size_t li = mlp.num_layers(); li-- > 0;) {
    const DenseLayer& layer = mlp.layers()[li];
    const Tensor& z = cache.preactivations[li];
    if (layer.activation == Activation::kRelu) {
      for (std::size_t k = 0; k < grad.size(); ++k) {
        if (!(z[k] > 0.0)) grad[k] = 0.0;
      }
    }
    Tensor dw = Tensor::matrix(layer.out_dim(), layer.in_dim());
    as_matrix(dw).noalias() = as_matrix(grad).transpose() * as_matrix(cache.inputs[li]);
    Tensor db = Tensor::matrix(1, layer.out_dim());
    as_matrix(db).row(0) = as_matrix(grad).colwise().sum();
    Tensor dx = Tensor::matrix(grad.rows(), layer.in_dim());
    as_matrix(dx).noalias() = as_matrix(grad) * as_matrix(layer.weight);
    result.params.tensors[2 * li] = std::move(dw);
    result.params.tensors[2 * li + 1] = std::move(db);
    grad = std::move(dx);
  }
  result.grad_input = std::move(grad);
  return result;
}

std::vector<double> flatten(std::span<const Tensor* const> params) {
  std::vector<double> out;
  for (const Tensor* t : params) out.insert(out.end(), t->values().begin(), t->values().end());
  return out;
}

}  // namespace vfl
