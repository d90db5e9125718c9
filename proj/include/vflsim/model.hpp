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
#include <string>
#include <vector>

namespace vfl {

// Network shapes shared by every party. Bottom and Rep networks use ReLU on
// hidden layers; bottom outputs are ReLU as well, Rep and top outputs are
// linear. The top model always ends in a single logit after `top`.
struct ModelDims {
  std::size_t embedding_dim = 10;
  std::vector<std::size_t> host_bottom = {512, 256, 128};
  std::vector<std::size_t> guest_bottom = {512, 256, 128};
  std::vector<std::size_t> top = {256, 128};
  // Last entry must equal the guest representation width.
  std::vector<std::size_t> rep = {128, 128};

  std::size_t host_rep_dim() const { return host_bottom.back(); }
  std::size_t guest_rep_dim() const { return guest_bottom.back(); }

  void validate() const;
  std::string describe() const;
  bool operator==(const ModelDims&) const = default;
};

}  // namespace vfl
