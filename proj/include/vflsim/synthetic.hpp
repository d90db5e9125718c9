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
#include <vector>

#include "vflsim/data.hpp"

namespace vfl {

// Latent-factor generator for correlated two-party click data.
//
// Every sample draws a latent u ~ N(0, I_4). Each party sees u through its
// own per-sample view noise, one standard deviation per latent dimension
// and shared across that party's slots, so it cannot be averaged away. Each
// slot adds independent noise on top of a random unit projection of the
// view and is quantized into `buckets` levels. By default the host sees the
// first latent dimension clearly and the other three poorly, and the guest
// the other way round. The click label is
// Bernoulli(sigmoid(label_scale * w.u + label_noise * e)) with
// w = (1, 1, 1, 1) / 2.
struct SyntheticConfig {
  std::size_t n_samples = 10000;
  double aligned_fraction = 0.6;
  // Extra guest rows whose keys the host never sees, as a fraction of n.
  double guest_only_fraction = 0.1;
  std::size_t host_slots = 10;
  std::size_t guest_slots = 12;
  std::size_t vocab_size = 1000;
  std::size_t buckets = 24;
  std::vector<double> host_view_noise = {0.5, 1.5, 1.5, 1.5};
  std::vector<double> guest_view_noise = {1.5, 0.5, 0.5, 0.5};
  double slot_noise = 0.5;
  double label_scale = 2.5;
  double label_noise = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

inline constexpr std::size_t kLatentDim = 4;

struct SyntheticData {
  RawFrame host_frame;
  RawFrame guest_frame;
  FeatureSchema host_schema;
  FeatureSchema guest_schema;
  PartyDataset host;
  PartyDataset guest;
  // Latent vectors of the host rows (n x 4), kept for oracle tests.
  Tensor host_latent;
  std::size_t n_aligned = 0;
};

FeatureSchema synthetic_schema(Party party, std::size_t slots, std::size_t vocab_size);

SyntheticData gen_synthetic(const SyntheticConfig& config);

}  // namespace vfl
