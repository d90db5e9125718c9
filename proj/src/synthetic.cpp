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

#include "vflsim/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "vflsim/error.hpp"
#include "vflsim/loss.hpp"
#include "vflsim/rng.hpp"

namespace vfl {
namespace {

using Latent = std::array<double, kLatentDim>;

Latent unit_vector(Rng& rng) {
  Latent v{};
  double norm = 0.0;
  while (norm < 1e-12) {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

std::string make_key(std::uint64_t seed, std::uint64_t index) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(splitmix64(derive_seed(seed, "key") + index)));
  return buf;
}

std::string slot_name(Party party, std::size_t j) {
  return (party == Party::kHost ? "h" : "g") + std::to_string(j);
}

// Quantized noisy projections of u for one party. Slot j only depends on
// (seed, party, j, sample), so adding slots never changes existing ones.
std::vector<std::string> party_tokens(const SyntheticConfig& cfg, Party party,
                                      std::size_t slots, const Latent& u,
                                      std::size_t sample,
                                      const std::vector<Latent>& projections) {
  const std::string tag = to_string(party);
  const std::vector<double>& noise =
      party == Party::kHost ? cfg.host_view_noise : cfg.guest_view_noise;
  Rng view_rng(derive_seed(cfg.seed, tag + ".view", sample));
  Latent view = u;
  for (std::size_t k = 0; k < kLatentDim; ++k) view[k] += noise[k] * view_rng.normal();

  const auto buckets = static_cast<double>(cfg.buckets);
  std::vector<std::string> tokens;
  tokens.reserve(slots);
  Rng slot_rng(derive_seed(cfg.seed, tag + ".slot", sample));
  for (std::size_t j = 0; j < slots; ++j) {
    double v = 0.0;
    for (std::size_t k = 0; k < kLatentDim; ++k) v += projections[j][k] * view[k];
    v += cfg.slot_noise * slot_rng.normal();
    double var = cfg.slot_noise * cfg.slot_noise;
    for (std::size_t k = 0; k < kLatentDim; ++k) {
      var += projections[j][k] * projections[j][k] * (1.0 + noise[k] * noise[k]);
    }
    const double spread = std::sqrt(var);
    const double pos = std::floor((v / spread + 3.0) / 6.0 * buckets);
    const auto bucket = static_cast<long>(std::clamp(pos, 0.0, buckets - 1.0));
    tokens.push_back(std::to_string(bucket));
  }
  return tokens;
}

std::vector<Latent> projections(std::uint64_t seed, Party party, std::size_t slots) {
  std::vector<Latent> out;
  for (std::size_t j = 0; j < slots; ++j) {
    Rng rng(derive_seed(seed, to_string(party) + ".projection", j));
    out.push_back(unit_vector(rng));
  }
  return out;
}

Latent draw_latent(std::uint64_t seed, std::size_t sample) {
  Rng rng(derive_seed(seed, "latent", sample));
  Latent u{};
  for (double& x : u) x = rng.normal();
  return u;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (n_samples == 0) throw ConfigError("synthetic n_samples must be >= 1");
  if (!(aligned_fraction >= 0.0 && aligned_fraction <= 1.0)) {
    throw ConfigError("aligned_fraction must lie in [0, 1]");
  }
  if (!(guest_only_fraction >= 0.0 && guest_only_fraction <= 1.0)) {
    throw ConfigError("guest_only_fraction must lie in [0, 1]");
  }
  if (host_slots < 1 || guest_slots < 1) throw ConfigError("slot counts must be >= 1");
  if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
  if (buckets < 2) throw ConfigError("buckets must be >= 2");
  for (const auto* noise : {&host_view_noise, &guest_view_noise}) {
    if (noise->size() != kLatentDim) {
      throw ConfigError("view noise needs one value per latent dimension (" +
                        std::to_string(kLatentDim) + ")");
    }
    for (double x : *noise) {
      if (!(x >= 0.0)) throw ConfigError("noise levels must be non-negative");
    }
  }
  if (!(slot_noise >= 0.0) || !(label_noise >= 0.0)) {
    throw ConfigError("noise levels must be non-negative");
  }
}

FeatureSchema synthetic_schema(Party party, std::size_t slots, std::size_t vocab_size) {
  FeatureSchema schema;
  schema.party = party;
  for (std::size_t j = 0; j < slots; ++j) schema.slots.push_back({slot_name(party, j), vocab_size});
  return schema;
}

SyntheticData gen_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  SyntheticData out;
  out.host_schema = synthetic_schema(Party::kHost, cfg.host_slots, cfg.vocab_size);
  out.guest_schema = synthetic_schema(Party::kGuest, cfg.guest_slots, cfg.vocab_size);
  out.n_aligned = static_cast<std::size_t>(
      std::ceil(cfg.aligned_fraction * static_cast<double>(cfg.n_samples)));
  out.n_aligned = std::min(out.n_aligned, cfg.n_samples);
  const auto n_guest_only = static_cast<std::size_t>(
      std::floor(cfg.guest_only_fraction * static_cast<double>(cfg.n_samples)));

  const auto host_proj = projections(cfg.seed, Party::kHost, cfg.host_slots);
  const auto guest_proj = projections(cfg.seed, Party::kGuest, cfg.guest_slots);
  Latent label_weights{};
  label_weights.fill(1.0 / std::sqrt(static_cast<double>(kLatentDim)));

  out.host_frame.header = {out.host_schema.key_column, out.host_schema.label_column};
  for (const SlotSpec& s : out.host_schema.slots) out.host_frame.header.push_back(s.name);
  out.guest_frame.header = {out.guest_schema.key_column};
  for (const SlotSpec& s : out.guest_schema.slots) out.guest_frame.header.push_back(s.name);

  out.host_latent = Tensor::matrix(cfg.n_samples, kLatentDim);
  std::vector<std::vector<std::string>> guest_rows;
  for (std::size_t i = 0; i < cfg.n_samples + n_guest_only; ++i) {
    const Latent u = draw_latent(cfg.seed, i);
    const std::string key = make_key(cfg.seed, i);
    if (i < cfg.n_samples) {
      for (std::size_t k = 0; k < kLatentDim; ++k) out.host_latent(i, k) = u[k];
      Rng label_rng(derive_seed(cfg.seed, "label", i));
      double logit = 0.0;
      for (std::size_t k = 0; k < kLatentDim; ++k) logit += label_weights[k] * u[k];
      logit = cfg.label_scale * logit + cfg.label_noise * label_rng.normal();
      const bool click = label_rng.bernoulli(sigmoid(logit));

      std::vector<std::string> row = {key, click ? "1" : "0"};
      auto tokens = party_tokens(cfg, Party::kHost, cfg.host_slots, u, i, host_proj);
      row.insert(row.end(), tokens.begin(), tokens.end());
      out.host_frame.rows.push_back(std::move(row));
    }
    if (i < out.n_aligned || i >= cfg.n_samples) {
      std::vector<std::string> row = {key};
      auto tokens = party_tokens(cfg, Party::kGuest, cfg.guest_slots, u, i, guest_proj);
      row.insert(row.end(), tokens.begin(), tokens.end());
      guest_rows.push_back(std::move(row));
    }
  }
  // The guest stores its records in its own order.
  const auto order =
      batch_iter(guest_rows.size(), std::max<std::size_t>(guest_rows.size(), 1),
                 derive_seed(cfg.seed, "guest.order"), 0);
  if (!order.empty()) {
    for (std::size_t idx : order.front()) out.guest_frame.rows.push_back(guest_rows[idx]);
  }

  out.host = parse_frame(out.host_frame, out.host_schema);
  out.guest = parse_frame(out.guest_frame, out.guest_schema);
  return out;
}

}  // namespace vfl
