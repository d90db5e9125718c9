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
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vflsim/tensor.hpp"

namespace vfl {

// Versioned container of named tensors.
//
// File layout (little-endian):
//   "FUD1"                      magic
//   u32   format version (1)
//   u64   config digest
//   str   config echo, method tag, phase tag     (str = u64 length + bytes)
//   i64   epoch index
//   u64 n, f64[n]               validation metric history
//   u64 n, {str, i64}[n]        integer counters (optimizer steps)
//   u64 n, {str, u64 rank, u64 dims[rank], f64 values}[n]
//   u64   FNV-1a 64 of every byte after the magic
//
// Tensors are stored in the fixed order produced by the trainer: guest
// embeddings and bottom layers, host embeddings, bottom, top and Rep layers,
// then optimizer moments.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t config_digest = 0;
  std::string config_text;
  std::string method;
  std::string phase;
  std::int64_t epoch = 0;
  std::vector<double> validation_history;
  std::vector<std::pair<std::string, std::int64_t>> counters;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
  std::int64_t counter(const std::string& name, std::int64_t fallback = 0) const;

  bool operator==(const Checkpoint&) const = default;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vfl
